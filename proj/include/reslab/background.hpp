#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "poly.hpp"

namespace reslab {

// Point of the two-sheeted spectral surface: a plane coordinate plus the
// sheet index. Sheet 1 carries the decaying branch of the square root
// (bounded Floquet multiplier), sheet 2 the growing one. Real points with
// imag == +0.0 act as upper-rim boundary values on the first sheet.
struct SheetPoint {
    cplx lam;
    int sheet = 1;
};

enum class J0Kind { Bound, Antibound, Virtual };

// One finite spectral gap (index j in 1..q-1). Every open gap closure holds
// exactly one Dirichlet point mu, one root nu_pt of the (q+1)-th Neumann-type
// polynomial, and one critical point alpha of the discriminant.
struct GapInfo {
    int j = 0;
    double lo = 0.0, hi = 0.0;
    bool closed = false;
    double mu = 0.0;
    double nu_pt = 0.0;
    double alpha = 0.0;
    double h = 0.0; // gap height parameter, cosh h = |Delta(alpha)|
};

struct BandStructure {
    std::vector<double> edges;                      // 2q values, ascending
    std::vector<std::array<double, 2>> bands;       // q closed intervals
    std::vector<GapInfo> gaps;                      // q-1 finite gaps
    double span = 1.0;                              // edges.back() - edges.front()
};

// State of the unperturbed half-lattice operator attached to an open gap.
struct J0State {
    int gap = 0;     // finite gap index 1..q-1
    double mu = 0.0; // its Dirichlet eigenvalue
    J0Kind kind = J0Kind::Bound;
};

// Periodic background: q-periodic positive off-diagonal a and real diagonal b
// with the off-diagonal product normalized to 1, plus everything derived from
// the fundamental solutions over one period.
struct Background {
    int q = 0;
    std::vector<double> a; // a[0..q-1] stores a_1..a_q; a_0 == a_q by periodicity
    std::vector<double> b; // b[0..q-1] stores b_1..b_q

    std::vector<Poly> theta, phi; // fundamental solutions, indices 0..q+1

    Poly delta;     // discriminant polynomial, degree q, leading coefficient 1/2
    Poly delta_dot; // its derivative
    Poly phi_half;  // (phi_{q+1} - theta_q)/2
    Poly phi_q;     // phi at site q, roots are the Dirichlet eigenvalues
    Poly theta_q;   // theta at site q
    Poly theta_q1;  // theta at site q+1
    Poly disc;      // delta^2 - 1

    BandStructure bands;
    std::vector<J0State> j0_states;

    double a0() const { return a[static_cast<std::size_t>(q) - 1]; } // a_0 = a_q

    // Periodic coefficient access for any site n >= 0.
    double a_at(int n) const {
        int r = n % q;
        return r == 0 ? a0() : a[static_cast<std::size_t>(r) - 1];
    }
    double b_at(int n) const {
        int r = n % q;
        return r == 0 ? b[static_cast<std::size_t>(q) - 1] : b[static_cast<std::size_t>(r) - 1];
    }
};

// Fundamental solution polynomials theta_n, phi_n for n = 0..N against the
// periodic background: both satisfy
//   a_n y_{n+1} + a_{n-1} y_{n-1} + b_n y_n = lambda y_n
// with theta_0 = 1, theta_1 = 0 and phi_0 = 0, phi_1 = 1.
inline std::pair<std::vector<Poly>, std::vector<Poly>> fundamental(const Background& bg, int N) {
    std::vector<Poly> th(static_cast<std::size_t>(N) + 1), ph(static_cast<std::size_t>(N) + 1);
    th[0] = Poly::constant(1.0);
    ph[0] = Poly();
    if (N >= 1) {
        th[1] = Poly();
        ph[1] = Poly::constant(1.0);
    }
    for (int n = 1; n < N; ++n) {
        Poly lam_minus_b = Poly({-bg.b_at(n), 1.0});
        double an = bg.a_at(n), am = bg.a_at(n - 1);
        th[static_cast<std::size_t>(n) + 1] =
            (1.0 / an) * (lam_minus_b * th[static_cast<std::size_t>(n)] - am * th[static_cast<std::size_t>(n) - 1]);
        ph[static_cast<std::size_t>(n) + 1] =
            (1.0 / an) * (lam_minus_b * ph[static_cast<std::size_t>(n)] - am * ph[static_cast<std::size_t>(n) - 1]);
    }
    return {std::move(th), std::move(ph)};
}

// Branch of sqrt(Delta^2 - 1) attached to the surface point: the product of
// principal square roots of (lambda - edge) over all band edges, scaled by
// -1/2, negated on the second sheet. Real lambda between or beyond the edges
// automatically receives its upper-rim value because the principal branch
// treats a +0.0 imaginary part as approach from above.
inline cplx sqrt_disc(const Background& bg, SheetPoint pt) {
    cplx lam = pt.lam;
    if (lam.imag() == 0.0) lam = cplx(lam.real(), +0.0); // normalize away -0.0
    cplx prod = 1.0;
    for (double e : bg.bands.edges) prod *= std::sqrt(lam - e);
    cplx v = -0.5 * prod;
    return pt.sheet == 2 ? -v : v;
}

// Floquet multipliers xi_plus (bounded on sheet 1) and xi_minus; their
// product is identically 1.
inline std::pair<cplx, cplx> floquet_multipliers(const Background& bg, SheetPoint pt) {
    cplx d = bg.delta(pt.lam);
    cplx s = sqrt_disc(bg, pt);
    return {d + s, d - s};
}

// Weyl functions m_plus and m_minus as seen from the given surface point;
// flipping the sheet swaps the pair.
inline std::pair<cplx, cplx> weyl_m(const Background& bg, SheetPoint pt) {
    cplx s = sqrt_disc(bg, pt);
    cplx ph = bg.phi_half(pt.lam);
    cplx pq = bg.phi_q(pt.lam);
    cplx tq1 = bg.theta_q1(pt.lam);
    // The quotients are (ph +- s)/pq, but far from the bands one numerator
    // cancels to the reciprocal scale of the other and loses precision.
    // Rewrite the smaller one through (ph + s)(ph - s) = -phi_q theta_{q+1},
    // the usual stable-root form of a quadratic.
    cplx sum = ph + s, dif = ph - s;
    if (std::abs(sum) >= std::abs(dif)) return {sum / pq, -tq1 / sum};
    return {-tq1 / dif, dif / pq};
}

// Values of the Floquet solution psi_n = theta_n + m_plus(pt) phi_n for
// n = 0..N by the scalar three-term recursion. psi_q equals the bounded
// Floquet multiplier of the point's sheet.
inline std::vector<cplx> bloch_psi(const Background& bg, SheetPoint pt, int N) {
    cplx m = weyl_m(bg, pt).first;
    std::vector<cplx> y(static_cast<std::size_t>(N) + 1);
    y[0] = 1.0;
    if (N >= 1) y[1] = m;
    for (int n = 1; n < N; ++n)
        y[static_cast<std::size_t>(n) + 1] =
            ((pt.lam - bg.b_at(n)) * y[static_cast<std::size_t>(n)] -
             bg.a_at(n - 1) * y[static_cast<std::size_t>(n) - 1]) /
            bg.a_at(n);
    return y;
}

namespace detail {

// Index of the gap closure containing real x: 0 and q are the infinite gaps,
// -1 means strict band interior.
inline int gap_index(const BandStructure& bs, double x, double tol = 0.0) {
    const int q = static_cast<int>(bs.bands.size());
    if (x <= bs.edges.front() + tol) return 0;
    if (x >= bs.edges.back() - tol) return q;
    for (int j = 1; j < q; ++j) {
        if (x >= bs.edges[static_cast<std::size_t>(2 * j - 1)] - tol &&
            x <= bs.edges[static_cast<std::size_t>(2 * j)] + tol)
            return j;
    }
    return -1;
}

} // namespace detail

// Quasimomentum on the principal branch: bands map to real values with
// q*kappa covering [-q*pi, 0] left to right, real gap points return their
// first-sheet (upper-rim) values with Im kappa = h(lambda) >= 0, and complex
// points are continued vertically from a real anchor. The branch satisfies
// kappa(conj lambda) = -conj(kappa(lambda)), so Im kappa > 0 off the bands.
inline cplx quasimomentum(const Background& bg, cplx lam) {
    const BandStructure& bs = bg.bands;
    const int q = bg.q;
    const double pi = 3.141592653589793238463;
    const double real_tol = 1e-13 * (1.0 + std::abs(lam));

    auto real_value = [&](double x) -> cplx {
        int g = detail::gap_index(bs, x, 0.0);
        if (g >= 0) {
            double dval = bg.delta(x) * ((q - g) % 2 == 0 ? 1.0 : -1.0);
            double qh = std::acosh(std::max(1.0, dval));
            return cplx(-(q - g) * pi, qh) / static_cast<double>(q);
        }
        // Band interior: locate the band and unwind the arccosine.
        int band = 0;
        for (int bidx = 0; bidx < q; ++bidx)
            if (x >= bs.bands[static_cast<std::size_t>(bidx)][0] && x <= bs.bands[static_cast<std::size_t>(bidx)][1])
                band = bidx;
        double sgn = ((q - 1 - band) % 2 == 0) ? 1.0 : -1.0;
        double t = std::acos(std::clamp(sgn * bg.delta(x), -1.0, 1.0));
        return cplx(-(q - 1 - band) * pi - t, 0.0) / static_cast<double>(q);
    };

    if (std::fabs(lam.imag()) <= real_tol) return real_value(lam.real());
    if (lam.imag() < 0.0) return -std::conj(quasimomentum(bg, std::conj(lam)));

    // Continue q*kappa = -i log xi_plus upward from the real anchor, fixing
    // the log branch by continuity at every step.
    const double x = lam.real();
    cplx prev = static_cast<double>(q) * real_value(x);
    const int steps = 48;
    cplx w = prev;
    for (int s = 1; s <= steps; ++s) {
        cplx lt(x, lam.imag() * static_cast<double>(s) / steps);
        cplx xi = floquet_multipliers(bg, {lt, 1}).first;
        w = -cplx(0.0, 1.0) * std::log(xi);
        double shift = std::round((prev.real() - w.real()) / (2.0 * pi));
        w += cplx(2.0 * pi * shift, 0.0);
        prev = w;
    }
    return w / static_cast<double>(q);
}

// Classification of the unperturbed operator's gap states. Each open finite
// gap carries exactly one simple state at its Dirichlet eigenvalue mu_j: a
// bound state when the unbounded Floquet branch matches theta_q(mu_j), an
// antibound state when the bounded branch does, and a virtual state when
// mu_j sits at a gap edge. Closed gaps carry no state.
inline std::vector<J0State> classify_j0_states(const Background& bg) {
    std::vector<J0State> out;
    for (const GapInfo& g : bg.bands.gaps) {
        if (g.closed) continue;
        J0State st;
        st.gap = g.j;
        st.mu = g.mu;
        double edge_tol = 1e-8 * (1.0 + std::fabs(g.mu));
        if (std::fabs(g.mu - g.lo) <= edge_tol || std::fabs(g.mu - g.hi) <= edge_tol) {
            st.kind = J0Kind::Virtual;
        } else {
            auto [xp, xm] = floquet_multipliers(bg, {cplx(g.mu, 0.0), 1});
            double tq = bg.theta_q(g.mu);
            // theta_q(mu) always equals one of the two (real) multipliers.
            st.kind = (std::fabs(tq - xp.real()) <= std::fabs(tq - xm.real())) ? J0Kind::Antibound
                                                                               : J0Kind::Bound;
        }
        out.push_back(st);
    }
    return out;
}

// Numeric probe of the edge pole of the Floquet solution when a Dirichlet
// eigenvalue sits at a band edge: returns psi_n(lambda) * (z(lambda) - z(e))
// sampled just inside the adjacent band, which approximates the residue of
// psi_n at the edge in the z coordinate. Exposed for inspection; the sign
// convention is recorded by tests rather than asserted.
inline cplx edge_dirichlet_residue(const Background& bg, double edge, int n, double rel_offset = 1e-6) {
    // Find the band adjacent to this edge and step into it.
    double step = 0.0;
    for (const auto& bandiv : bg.bands.bands) {
        if (std::fabs(edge - bandiv[0]) <= 1e-12 * (1.0 + std::fabs(edge)))
            step = (bandiv[1] - bandiv[0]) * rel_offset;
        if (std::fabs(edge - bandiv[1]) <= 1e-12 * (1.0 + std::fabs(edge)))
            step = -(bandiv[1] - bandiv[0]) * rel_offset;
    }
    if (step == 0.0) throw Error("edge_dirichlet_residue: not a band edge");
    cplx lam(edge + step, 0.0);
    cplx z = std::exp(cplx(0.0, 1.0) * quasimomentum(bg, lam));
    cplx ze = std::exp(cplx(0.0, 1.0) * quasimomentum(bg, cplx(edge, 0.0)));
    std::vector<cplx> psi = bloch_psi(bg, {lam, 1}, n);
    return psi[static_cast<std::size_t>(n)] * (z - ze);
}

// Builds the full background from one period of coefficients. Throws when
// the class constraints fail (q >= 2, positivity, unit product) or when the
// band computation cannot be completed reliably.
inline Background build_background(int q, std::vector<double> a, std::vector<double> b) {
    if (q < 2) throw ClassViolationError("background: period must be >= 2");
    if (static_cast<int>(a.size()) != q || static_cast<int>(b.size()) != q)
        throw ClassViolationError("background: coefficient arrays must have length q");
    double prod = 1.0;
    for (double av : a) {
        if (!(av > 0.0)) throw ClassViolationError("background: off-diagonal entries must be positive");
        prod *= av;
    }
    if (std::fabs(prod - 1.0) > 1e-10)
        throw ClassViolationError("background: off-diagonal product must be 1");

    Background bg;
    bg.q = q;
    bg.a = std::move(a);
    bg.b = std::move(b);

    auto fp = fundamental(bg, q + 1);
    bg.theta = std::move(fp.first);
    bg.phi = std::move(fp.second);

    const std::size_t uq = static_cast<std::size_t>(q);
    bg.delta = 0.5 * (bg.phi[uq + 1] + bg.theta[uq]);
    bg.phi_half = 0.5 * (bg.phi[uq + 1] - bg.theta[uq]);
    bg.phi_q = bg.phi[uq];
    bg.theta_q = bg.theta[uq];
    bg.theta_q1 = bg.theta[uq + 1];
    bg.delta_dot = bg.delta.deriv();
    bg.disc = bg.delta * bg.delta - Poly::constant(1.0);

    // Band edges: all 2q roots of Delta^2 - 1, necessarily real.
    RootSet rs = roots(bg.disc);
    std::vector<double> edges;
    for (const Root& r : rs.roots) {
        if (std::fabs(r.value.imag()) > 1e-7 * std::max(1.0, std::abs(r.value)))
            throw AmbiguityError("background: discriminant edge computation failed (complex edge)");
        for (int k = 0; k < r.multiplicity; ++k) edges.push_back(r.value.real());
    }
    std::sort(edges.begin(), edges.end());
    if (static_cast<int>(edges.size()) != 2 * q)
        throw AmbiguityError("background: discriminant edge computation failed (edge count)");

    bg.bands.edges = edges;
    bg.bands.span = edges.back() - edges.front();
    for (int j = 0; j < q; ++j)
        bg.bands.bands.push_back({edges[static_cast<std::size_t>(2 * j)], edges[static_cast<std::size_t>(2 * j) + 1]});

    // Interior points: Dirichlet eigenvalues (phi_q), nu points (theta_q1)
    // and discriminant critical points, one per finite gap closure.
    auto sorted_real_roots = [&](const Poly& p, const char* what) {
        RootSet r = roots(p);
        std::vector<double> xs;
        for (const Root& root : r.roots) {
            if (std::fabs(root.value.imag()) > 1e-6 * std::max(1.0, std::abs(root.value)))
                throw AmbiguityError(std::string("background: complex ") + what);
            for (int k = 0; k < root.multiplicity; ++k) xs.push_back(root.value.real());
        }
        std::sort(xs.begin(), xs.end());
        if (static_cast<int>(xs.size()) != q - 1)
            throw AmbiguityError(std::string("background: wrong count of ") + what);
        return xs;
    };
    std::vector<double> mu = sorted_real_roots(bg.phi_q, "Dirichlet eigenvalues");
    std::vector<double> nupts = sorted_real_roots(bg.theta_q1, "theta_{q+1} roots");
    std::vector<double> alpha = sorted_real_roots(bg.delta_dot, "discriminant critical points");

    for (int j = 1; j < q; ++j) {
        GapInfo g;
        g.j = j;
        g.lo = edges[static_cast<std::size_t>(2 * j - 1)];
        g.hi = edges[static_cast<std::size_t>(2 * j)];
        g.closed = (g.hi - g.lo) <= 1e-9 * (1.0 + std::fabs(g.lo));
        g.mu = mu[static_cast<std::size_t>(j) - 1];
        g.nu_pt = nupts[static_cast<std::size_t>(j) - 1];
        g.alpha = alpha[static_cast<std::size_t>(j) - 1];
        double dval = bg.delta(g.alpha) * ((q - j) % 2 == 0 ? 1.0 : -1.0);
        g.h = std::acosh(std::max(1.0, dval));
        double slack = 1e-7 * (1.0 + bg.bands.span);
        if (g.mu < g.lo - slack || g.mu > g.hi + slack)
            throw AmbiguityError("background: Dirichlet eigenvalue escaped its gap closure");
        bg.bands.gaps.push_back(g);
    }

    bg.j0_states = classify_j0_states(bg);
    return bg;
}

} // namespace reslab
