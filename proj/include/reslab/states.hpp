#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jost.hpp"

namespace reslab {

enum class StateKind { Bound, Antibound, Resonance, Virtual, Collision };

inline const char* to_string(StateKind k) {
    switch (k) {
        case StateKind::Bound: return "bound";
        case StateKind::Antibound: return "antibound";
        case StateKind::Resonance: return "resonance";
        case StateKind::Virtual: return "virtual";
        case StateKind::Collision: return "collision";
    }
    return "?";
}

// One state of the perturbed operator. `point.sheet` is 1 for bound states,
// 2 for antibound states and resonances, 0 for virtual states (band edges
// belong to neither open sheet) and for collision states it mirrors the
// underlying unperturbed state (0 when that state is virtual).
struct State {
    SheetPoint point;
    StateKind kind = StateKind::Bound;
    int multiplicity = 1;
    int gap = -1;        // gap closure index 0..q for real states, -1 otherwise
    double residual = 0.0;
    std::string note;
};

// Dirichlet eigenvalues sorted by the nature of the unperturbed state they
// carry, and the monic products used to regularize the Jost functions:
// divisors Dp (poles of m_plus), Dm (poles of m_minus) and the square De2
// of the edge regularizer.
struct Regularizers {
    std::vector<double> Mp, Mm, Me;
    std::vector<double> closed_mu; // Dirichlet points of closed gaps, not regularized
    Poly Dp = Poly::constant(1.0);
    Poly Dm = Poly::constant(1.0);
    Poly De2 = Poly::constant(1.0);
    Poly Dc = Poly::constant(1.0); // closed-gap product, completes phi_q factorization
};

inline Regularizers regularizers(const Background& bg) {
    Regularizers reg;
    for (const GapInfo& g : bg.bands.gaps)
        if (g.closed) reg.closed_mu.push_back(g.mu);
    for (const J0State& st : bg.j0_states) {
        switch (st.kind) {
            case J0Kind::Bound: reg.Mp.push_back(st.mu); break;
            case J0Kind::Antibound: reg.Mm.push_back(st.mu); break;
            case J0Kind::Virtual: reg.Me.push_back(st.mu); break;
        }
    }
    auto monic = [](const std::vector<double>& xs) {
        Poly p = Poly::constant(1.0);
        for (double x : xs) p = p * Poly({-x, 1.0});
        return p;
    };
    reg.Dp = monic(reg.Mp);
    reg.Dm = monic(reg.Mm);
    reg.De2 = monic(reg.Me);
    reg.Dc = monic(reg.closed_mu);
    return reg;
}

// Edge regularizer value: product of principal square roots over the
// edge-collision points. Its square is the real polynomial De2, so any
// expression using only squared quantities is branch-free.
inline cplx de_value(const Regularizers& reg, cplx lam) {
    if (lam.imag() == 0.0) lam = cplx(lam.real(), +0.0);
    cplx prod = 1.0;
    for (double mu : reg.Me) prod *= std::sqrt(lam - mu);
    return prod;
}

namespace detail {

// Regularized Jost value D^e * D_sheet * f_0 at a surface point. Near a
// Dirichlet eigenvalue the plain Weyl quotient is 0/0; the value there is
// recovered by even-order extrapolation from two displaced points.
inline cplx fhat0_impl(const Background& bg, const SiteZeroData& sz, const Regularizers& reg,
                       SheetPoint pt, int depth) {
    double scale_q = bg.phi_q.scale_at(std::abs(pt.lam));
    if (std::abs(bg.phi_q(pt.lam)) <= 1e-8 * scale_q) {
        if (depth > 0) throw AmbiguityError("fhat0: Dirichlet collision could not be resolved");
        double d = 1e-5 * (1.0 + std::abs(pt.lam));
        cplx left = fhat0_impl(bg, sz, reg, {pt.lam - d, pt.sheet}, depth + 1);
        cplx right = fhat0_impl(bg, sz, reg, {pt.lam + d, pt.sheet}, depth + 1);
        return 0.5 * (left + right);
    }
    cplx m = weyl_m(bg, pt).first;
    const Poly& D = (pt.sheet == 2) ? reg.Dm : reg.Dp;
    return de_value(reg, pt.lam) * D(pt.lam) * (sz.theta0(pt.lam) + m * sz.phi0(pt.lam));
}

} // namespace detail

inline cplx fhat0(const Background& bg, const SiteZeroData& sz, const Regularizers& reg, SheetPoint pt) {
    return detail::fhat0_impl(bg, sz, reg, pt, 0);
}

// Unregularized scattering value f_0(second sheet) / f_0(first sheet);
// unimodular on the band rims.
inline cplx s_matrix(const Background& bg, const SiteZeroData& sz, cplx lam) {
    cplx f1 = sz.theta0(lam) + weyl_m(bg, {lam, 1}).first * sz.phi0(lam);
    cplx f2 = sz.theta0(lam) + weyl_m(bg, {lam, 2}).first * sz.phi0(lam);
    return f2 / f1;
}

// Regularized scattering value Dm f_0^- / (Dp f_0^+); the edge factors
// cancel. Finite across the Dirichlet points of the open gaps.
inline cplx shat(const Background& bg, const SiteZeroData& sz, const Regularizers& reg, cplx lam) {
    return detail::fhat0_impl(bg, sz, reg, {lam, 2}, 0) / detail::fhat0_impl(bg, sz, reg, {lam, 1}, 0);
}

struct GapTally {
    int j = 0;             // gap closure index 0..q
    int with_mult = 0;     // all states projecting into the closure, with multiplicity
    int nbv = 0;           // bound + virtual count
    int nbv_collision = 0;    // same, including collision states
};

struct StatesResult {
    std::vector<State> states;
    std::vector<GapTally> tallies;
    std::vector<std::string> warnings;
    Regularizers reg;
    int kappa = 0;
};

struct StatesOptions {
    double root_residual_tol = 1e-8; // relative residual gate after refinement
};

namespace detail {

inline std::string fmt_lam(cplx z) {
    std::ostringstream os;
    os << z.real();
    if (z.imag() != 0.0) os << (z.imag() > 0 ? "+" : "") << z.imag() << "i";
    return os.str();
}

// Two-point square-root fit at a band edge: a virtual state makes |f_0|
// shrink like sqrt(eps) stepping into the adjacent gap, so the magnitude
// ratio between eps/4 and eps is near 1/2. Near 1 means no vanishing at all.
inline bool confirm_virtual(const Background& bg, const SiteZeroData& sz, double edge) {
    const auto& edges = bg.bands.edges;
    std::size_t idx = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        double d = std::fabs(edges[k] - edge);
        if (d < best) {
            best = d;
            idx = k;
        }
    }
    // Even index: a band starts here, the gap is to the left. Odd: to the right.
    double dir = (idx % 2 == 0) ? -1.0 : 1.0;
    double eps = 1e-6 * (1.0 + std::fabs(edge));
    int gi = (idx % 2 == 0) ? static_cast<int>(idx) / 2 : (static_cast<int>(idx) + 1) / 2;
    if (gi >= 1 && gi <= bg.q - 1) {
        const GapInfo& g = bg.bands.gaps[static_cast<std::size_t>(gi) - 1];
        eps = std::min(eps, 0.25 * (g.hi - g.lo));
    }
    auto f0_mag = [&](double x) {
        cplx m = weyl_m(bg, {cplx(x, 0.0), 1}).first;
        return std::abs(sz.theta0(cplx(x, 0.0)) + m * sz.phi0(cplx(x, 0.0)));
    };
    double g1 = f0_mag(edge + dir * eps);
    double g2 = f0_mag(edge + dir * eps / 4.0);
    if (g1 == 0.0) return true;
    double ratio = g2 / g1;
    if (ratio >= 0.3 && ratio <= 0.7) return true;
    if (ratio >= 0.85) return false;
    throw AmbiguityError("virtual-state fit at edge " + std::to_string(edge) +
                         " inconclusive (ratio " + std::to_string(ratio) + ")");
}

} // namespace detail

// Complete state list of the perturbed operator: every zero of the state
// polynomial F is located, attributed to a sheet (or to the edge/collision
// classes) and returned with its gap index. The classification enforces
// sheet exclusivity and flags structure-law breaches in `warnings`:
// parity per gap closure, bound-state simplicity, the derivative sign law
// and absence of band-interior zeros are structural guarantees for true
// data, so a breach indicates numerical failure rather than a new state type.
inline StatesResult all_states(const Background& bg, const SiteZeroData& sz,
                               const StatesOptions& opt = {}) {
    StatesResult res;
    res.kappa = sz.kappa;
    res.reg = regularizers(bg);
    const Regularizers& reg = res.reg;

    if (sz.F.degree() != sz.kappa)
        throw ClassViolationError("all_states: state polynomial degree does not match kappa");

    RootSet rs = roots(sz.F);
    for (const Root& rt : rs.roots) {
        if (rt.residual > opt.root_residual_tol)
            throw AmbiguityError("all_states: root refinement failed at " + detail::fmt_lam(rt.value) +
                                 " (residual " + std::to_string(rt.residual) + ")");
    }

    auto phi0_small = [&](double x) {
        double sc = sz.phi0.scale_at(std::fabs(x));
        return std::fabs(sz.phi0(x)) <= 1e-7 * std::max(sc, 1e-300);
    };

    for (const Root& rt : rs.roots) {
        State st;
        st.multiplicity = rt.multiplicity;
        st.residual = rt.residual;
        cplx z = rt.value;

        bool is_real = std::fabs(z.imag()) <= 1e-9 * (1.0 + std::abs(z));
        if (!is_real) {
            st.point = {z, 2};
            st.kind = StateKind::Resonance;
            st.gap = -1;
            res.states.push_back(st);
            continue;
        }

        double x = z.real();

        // Band-edge attribution.
        double nearest_edge = bg.bands.edges.front();
        for (double e : bg.bands.edges)
            if (std::fabs(x - e) < std::fabs(x - nearest_edge)) nearest_edge = e;
        if (std::fabs(x - nearest_edge) <= 1e-8 * (1.0 + std::fabs(nearest_edge))) {
            bool me_point = false;
            for (double mu : reg.Me)
                if (std::fabs(x - mu) <= 1e-8 * (1.0 + std::fabs(mu))) me_point = true;
            std::size_t eidx = 0;
            for (std::size_t k = 0; k < bg.bands.edges.size(); ++k)
                if (bg.bands.edges[k] == nearest_edge) eidx = k;
            int gi = (eidx % 2 == 0) ? static_cast<int>(eidx) / 2 : (static_cast<int>(eidx) + 1) / 2;
            if (me_point && phi0_small(x)) {
                st.point = {cplx(nearest_edge, 0.0), 0};
                st.kind = StateKind::Collision;
                st.gap = gi;
                st.note = "collision with edge Dirichlet point";
            } else {
                if (!detail::confirm_virtual(bg, sz, nearest_edge))
                    throw AmbiguityError("all_states: zero at edge " + std::to_string(nearest_edge) +
                                         " failed the square-root fit");
                st.point = {cplx(nearest_edge, 0.0), 0};
                st.kind = StateKind::Virtual;
                st.gap = gi;
                if (st.multiplicity != 1)
                    res.warnings.push_back("virtual state at " + std::to_string(nearest_edge) +
                                           " has multiplicity " + std::to_string(st.multiplicity));
            }
            res.states.push_back(st);
            continue;
        }

        // Dirichlet collision attribution.
        bool handled = false;
        for (const GapInfo& g : bg.bands.gaps) {
            if (std::fabs(x - g.mu) <= 1e-8 * (1.0 + std::fabs(g.mu)) && phi0_small(x)) {
                st.point = {cplx(g.mu, 0.0), 0};
                st.kind = StateKind::Collision;
                st.gap = g.j;
                for (const J0State& j0 : bg.j0_states)
                    if (j0.gap == g.j)
                        st.point.sheet = (j0.kind == J0Kind::Bound) ? 1 : (j0.kind == J0Kind::Antibound ? 2 : 0);
                st.note = "collision with Dirichlet point";
                res.states.push_back(st);
                handled = true;
                break;
            }
        }
        if (handled) continue;

        int gi = detail::gap_index(bg.bands, x, 1e-12 * (1.0 + std::fabs(x)));
        if (gi < 0)
            throw AmbiguityError("all_states: real zero " + std::to_string(x) + " lies inside a band");

        cplx f1 = fhat0(bg, sz, reg, {cplx(x, 0.0), 1});
        cplx f2 = fhat0(bg, sz, reg, {cplx(x, 0.0), 2});
        double ls = std::max(std::abs(f1), std::abs(f2));
        if (ls == 0.0) throw AmbiguityError("all_states: both sheet values vanish at " + std::to_string(x));
        if (std::abs(f1) <= 1e-7 * ls && std::abs(f2) >= 1e-4 * ls) {
            st.point = {cplx(x, 0.0), 1};
            st.kind = StateKind::Bound;
            st.gap = gi;
            if (st.multiplicity != 1)
                res.warnings.push_back("bound state at " + std::to_string(x) + " has multiplicity " +
                                       std::to_string(st.multiplicity));
            double sgn = ((bg.q - gi) % 2 == 0 ? 1.0 : -1.0) * sz.Fdot(x);
            if (!(sgn < 0.0))
                res.warnings.push_back("bound state at " + std::to_string(x) +
                                       " violates the derivative sign law");
        } else if (std::abs(f2) <= 1e-7 * ls && std::abs(f1) >= 1e-4 * ls) {
            st.point = {cplx(x, 0.0), 2};
            st.kind = StateKind::Antibound;
            st.gap = gi;
        } else {
            throw AmbiguityError("all_states: sheet attribution ambiguous at " + std::to_string(x) +
                                 " (|f1|=" + std::to_string(std::abs(f1)) +
                                 ", |f2|=" + std::to_string(std::abs(f2)) + ")");
        }
        res.states.push_back(st);
    }

    // Per-gap tallies and the parity law for open finite gaps.
    for (int j = 0; j <= bg.q; ++j) {
        GapTally t;
        t.j = j;
        for (const State& st : res.states) {
            if (st.gap != j) continue;
            t.with_mult += st.multiplicity;
            if (st.kind == StateKind::Bound || st.kind == StateKind::Virtual) t.nbv += st.multiplicity;
            if (st.kind == StateKind::Bound || st.kind == StateKind::Virtual ||
                st.kind == StateKind::Collision)
                t.nbv_collision += st.multiplicity;
        }
        res.tallies.push_back(t);
    }
    for (const GapInfo& g : bg.bands.gaps) {
        if (g.closed) {
            res.warnings.push_back("gap " + std::to_string(g.j) + " is closed; parity law skipped");
            continue;
        }
        const GapTally& t = res.tallies[static_cast<std::size_t>(g.j)];
        if (t.with_mult % 2 == 0 || t.with_mult < 1)
            res.warnings.push_back("gap " + std::to_string(g.j) + " holds " +
                                   std::to_string(t.with_mult) + " states; expected an odd count");
    }

    std::sort(res.states.begin(), res.states.end(), [](const State& a, const State& b) {
        if (a.point.lam.real() != b.point.lam.real()) return a.point.lam.real() < b.point.lam.real();
        return a.point.lam.imag() < b.point.lam.imag();
    });
    return res;
}

// Zero set of phi_0^+ with exceptional-set annotations: a zero may sit on a
// Dirichlet point, on a band edge, on both, or on neither. The separation
// flag (needed before the zero set alone can determine the operator) is
// true when every zero avoids the two exceptional sets except at points
// belonging to both simultaneously.
struct S1Zero {
    cplx lam;
    int multiplicity = 1;
    bool on_mu = false;
    bool on_edge = false;
};

struct S1ZeroReport {
    std::vector<S1Zero> zeros;
    bool separated = true;
};

inline S1ZeroReport zeros_S_minus_1(const Background& bg, const SiteZeroData& sz) {
    S1ZeroReport rep;
    if (sz.phi0.degree() < 1) return rep; // constant: no zeros, trivially separated
    RootSet rs = roots(sz.phi0);
    for (const Root& rt : rs.roots) {
        S1Zero z;
        z.lam = rt.value;
        z.multiplicity = rt.multiplicity;
        if (std::fabs(rt.value.imag()) <= 1e-9 * (1.0 + std::abs(rt.value))) {
            double x = rt.value.real();
            for (const GapInfo& g : bg.bands.gaps)
                if (std::fabs(x - g.mu) <= 1e-8 * (1.0 + std::fabs(g.mu))) z.on_mu = true;
            for (double e : bg.bands.edges)
                if (std::fabs(x - e) <= 1e-8 * (1.0 + std::fabs(e))) z.on_edge = true;
        }
        if (z.on_mu != z.on_edge) rep.separated = false;
        rep.zeros.push_back(z);
    }
    return rep;
}

// Norming constant of one bound state, computed two independent ways:
// the squared-solution series (summed exactly through its geometric tail)
// and the closed form through the derivative of the state polynomial.
struct NormingEntry {
    double lam = 0.0;
    int gap = 0;
    double series = 0.0;
    double closed_form = 0.0;
    double rel_diff = 0.0;
};

inline std::vector<NormingEntry> norming_constants(const Background& bg, const JostData& jd,
                                                   const StatesResult& st, double tol = 1e-6) {
    std::vector<NormingEntry> out;
    const Regularizers& reg = st.reg;
    for (const State& s : st.states) {
        if (s.kind != StateKind::Bound) continue;
        double r = s.point.lam.real();
        NormingEntry e;
        e.lam = r;
        e.gap = s.gap;

        // Series route. Beyond the perturbation the solution is exactly
        // Floquet, so the tail over each period is a geometric block.
        SheetPoint pt{cplx(r, 0.0), 1};
        cplx xi = floquet_multipliers(bg, pt).first;
        double xi2 = std::norm(xi); // real xi on a gap; norm == xi^2
        const int P = jd.pert.p;
        double partial = 0.0;
        for (int k = 0; k <= P; ++k) {
            cplx fk = jost_f(bg, jd, pt, k);
            partial += fk.real() * fk.real();
        }
        double block = 0.0;
        for (int k = P + 1; k <= P + bg.q; ++k) {
            cplx fk = jost_f(bg, jd, pt, k);
            block += fk.real() * fk.real();
        }
        double fac = reg.De2(r) * reg.Dp(r) * reg.Dp(r);
        e.series = fac * (partial + block / (1.0 - xi2));

        // Closed form through Fdot and the regularized second-sheet value.
        double sinh_qh = std::sqrt(std::max(0.0, bg.delta(r) * bg.delta(r) - 1.0));
        cplx fm = fhat0(bg, site_zero(jd), reg, {cplx(r, 0.0), 2});
        cplx denom = bg.a0() * fm * fm;
        double sign = ((bg.q - e.gap + 1) % 2 == 0) ? 1.0 : -1.0;
        e.closed_form = (jd.Fdot(r) * sign * 2.0 * sinh_qh / denom).real();

        e.rel_diff = std::fabs(e.series - e.closed_form) / std::max(std::fabs(e.closed_form), 1e-300);
        if (!(e.series > 0.0) || !(e.closed_form > 0.0))
            throw AmbiguityError("norming constant not positive at " + std::to_string(r));
        if (e.rel_diff > tol)
            throw AmbiguityError("norming constant mismatch at " + std::to_string(r) +
                                 " (rel diff " + std::to_string(e.rel_diff) + ")");
        out.push_back(e);
    }
    return out;
}

// Resolvent matrix element through the regular solution and the Jost
// solution: R(m,n) = Phi_min(lambda) f_max(lambda) / (a_0 f_0(lambda)).
inline cplx resolvent_entry(const Background& bg, const JostData& jd, int m, int n, SheetPoint pt) {
    if (m < 1 || n < 1) throw Error("resolvent_entry: sites are 1-based");
    int lo = std::min(m, n), hi = std::max(m, n);
    // Regular solution with perturbed coefficients: y_0 = 0, y_1 = 1.
    cplx y0 = 0.0, y1 = 1.0;
    for (int k = 1; k < lo; ++k) {
        cplx y2 = ((pt.lam - b_pert(bg, jd.pert, k)) * y1 - a_pert(bg, jd.pert, k - 1) * y0) /
                  a_pert(bg, jd.pert, k);
        y0 = y1;
        y1 = y2;
    }
    cplx f_hi = jost_f(bg, jd, pt, hi);
    cplx f_0 = jost_f(bg, jd, pt, 0);
    return y1 * f_hi / (bg.a0() * f_0);
}

} // namespace reslab
