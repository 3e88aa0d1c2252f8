#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "background.hpp"

namespace reslab {

// Finitely supported perturbation of the background: u shifts the
// off-diagonal and v the diagonal on sites 1..p (u[k], v[k] belong to site
// k+1). The top site must actually be perturbed: u_p != 0 (even class,
// nu = 2p) or u_p = 0, v_p != 0 (odd class, nu = 2p-1).
struct Perturbation {
    int p = 0;
    std::vector<double> u, v;
};

// Perturbed coefficient access; sites beyond p fall back to the background.
inline double a_pert(const Background& bg, const Perturbation& pt, int n) {
    double base = bg.a_at(n);
    if (n >= 1 && n <= pt.p) base += pt.u[static_cast<std::size_t>(n) - 1];
    return base;
}
inline double b_pert(const Background& bg, const Perturbation& pt, int n) {
    double base = bg.b_at(n);
    if (n >= 1 && n <= pt.p) base += pt.v[static_cast<std::size_t>(n) - 1];
    return base;
}

// Checks the class constraints and returns nu (2p or 2p-1).
inline int validate_perturbation(const Background& bg, const Perturbation& pt) {
    if (pt.p < 1) throw ClassViolationError("perturbation: support length must be >= 1");
    if (static_cast<int>(pt.u.size()) != pt.p || static_cast<int>(pt.v.size()) != pt.p)
        throw ClassViolationError("perturbation: u and v must have length p");
    for (int n = 1; n <= pt.p; ++n)
        if (!(a_pert(bg, pt, n) > 0.0))
            throw ClassViolationError("perturbation: perturbed off-diagonal entry must stay positive");
    if (pt.u[static_cast<std::size_t>(pt.p) - 1] != 0.0) return 2 * pt.p;
    if (pt.v[static_cast<std::size_t>(pt.p) - 1] != 0.0) return 2 * pt.p - 1;
    throw ClassViolationError("perturbation: top site unperturbed, reduce p");
}

// Jost solution data: polynomial components of f_n = theta_n^+ + m phi_n^+
// for sites 0..p+2, the state polynomial F whose zeros project all states,
// and the normalization constants tied to the leading coefficients.
struct JostData {
    Perturbation pert;
    int nu = 0;    // perturbation order
    int kappa = 0; // nu + q - 1 = deg F = total state count
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    double Ap = 1.0; // product of background off-diagonals over sites 0..p

    std::vector<Poly> tplus, pplus; // indices 0..p+2; [n] pairs with site n
    Poly F;                         // state polynomial at site 0
    Poly Fdot;

    const Poly& theta0() const { return tplus[0]; }
    const Poly& phi0() const { return pplus[0]; }
};

// Detached site-0 view: everything the state classification needs, whether
// it came from a forward computation or from reconstructed data.
struct SiteZeroData {
    Poly theta0, phi0, F, Fdot;
    int nu = 0, kappa = 0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, Ap = 1.0;
};

inline SiteZeroData site_zero(const JostData& jd) {
    return {jd.theta0(), jd.phi0(), jd.F, jd.Fdot, jd.nu, jd.kappa, jd.c1, jd.c2, jd.c3, jd.Ap};
}

namespace detail {

// Combines phi_q*A^2 + 2*phi_half*A*B - theta_q1*B^2 while tallying, per
// degree, the total magnitude that entered each coefficient. The top orders
// of this combination cancel structurally; coefficients indistinguishable
// from that cancellation's roundoff are snapped to zero so the polynomial
// degree is decided honestly.
inline Poly state_combination(const Background& bg, const Poly& A, const Poly& B) {
    Poly t1 = bg.phi_q * A * A;
    Poly t2 = 2.0 * (bg.phi_half * A * B);
    Poly t3 = bg.theta_q1 * B * B;
    Poly mag = (bg.phi_q.abs() * A.abs() * A.abs()) + 2.0 * (bg.phi_half.abs() * A.abs() * B.abs()) +
               (bg.theta_q1.abs() * B.abs() * B.abs());
    Poly raw = t1 + t2 - t3;
    std::vector<double> c(static_cast<std::size_t>(mag.degree()) + 1, 0.0);
    for (int k = 0; k <= mag.degree(); ++k) {
        double v = raw.coef(k);
        c[static_cast<std::size_t>(k)] = (std::fabs(v) <= 1e-12 * mag.coef(k)) ? 0.0 : v;
    }
    return Poly(std::move(c));
}

} // namespace detail

// Builds the Jost polynomial pairs by the backward three-term recursion.
//
// The recursion is seeded with the closed forms
//   f_p = (a0_p / a_p) psi_p,  f_{p+1} = psi_{p+1}            (u_p != 0)
//   f_{p-1} = (a0_{p-1} psi_{p-1} - v_p psi_p)/a_{p-1}        (u_p = 0)
// instead of stepping through the top site, because the plain first step
// cancels its leading orders and would poison every degree below.
inline JostData jost_polys(const Background& bg, const Perturbation& pt) {
    JostData jd;
    jd.pert = pt;
    jd.nu = validate_perturbation(bg, pt);
    jd.kappa = jd.nu + bg.q - 1;

    const int p = pt.p;
    auto [th, ph] = fundamental(bg, p + 2);

    jd.tplus.assign(static_cast<std::size_t>(p) + 3, Poly());
    jd.pplus.assign(static_cast<std::size_t>(p) + 3, Poly());
    auto& tp = jd.tplus;
    auto& pp = jd.pplus;
    const std::size_t up = static_cast<std::size_t>(p);

    tp[up + 2] = th[up + 2];
    pp[up + 2] = ph[up + 2];
    tp[up + 1] = th[up + 1];
    pp[up + 1] = ph[up + 1];

    int first; // highest site the generic backward step starts from
    if (jd.nu == 2 * p) {
        double scale = bg.a_at(p) / a_pert(bg, pt, p);
        tp[up] = scale * th[up];
        pp[up] = scale * ph[up];
        first = p;
    } else {
        tp[up] = th[up];
        pp[up] = ph[up];
        double vp = pt.v[up - 1];
        double am = a_pert(bg, pt, p - 1);
        tp[up - 1] = (1.0 / am) * (bg.a_at(p - 1) * th[up - 1] - vp * th[up]);
        pp[up - 1] = (1.0 / am) * (bg.a_at(p - 1) * ph[up - 1] - vp * ph[up]);
        first = p - 1;
    }

    for (int n = first; n >= 1; --n) {
        Poly lam_minus_b({-b_pert(bg, pt, n), 1.0});
        double an = a_pert(bg, pt, n), am = a_pert(bg, pt, n - 1);
        tp[static_cast<std::size_t>(n) - 1] =
            (1.0 / am) * (lam_minus_b * tp[static_cast<std::size_t>(n)] - an * tp[static_cast<std::size_t>(n) + 1]);
        pp[static_cast<std::size_t>(n) - 1] =
            (1.0 / am) * (lam_minus_b * pp[static_cast<std::size_t>(n)] - an * pp[static_cast<std::size_t>(n) + 1]);
    }

    // Normalization constants attached to the leading coefficients.
    double prod_a = bg.a0(), prod_a0 = bg.a0();
    for (int j = 1; j <= p; ++j) {
        prod_a *= a_pert(bg, pt, j);
        prod_a0 *= bg.a_at(j);
    }
    jd.Ap = prod_a0;
    jd.c1 = 1.0 / prod_a;
    if (jd.nu == 2 * p) {
        double ap0 = bg.a_at(p), ap = a_pert(bg, pt, p);
        jd.c2 = jd.c1 * pt.u[up - 1] * (ap0 + ap);
    } else {
        double ap0 = bg.a_at(p);
        jd.c2 = jd.c1 * ap0 * ap0 * pt.v[up - 1];
    }
    jd.c3 = jd.c1 * jd.c2;

    // Degree laws; failure means the recursion lost its leading orders.
    if (pp[0].degree() != jd.nu - 1)
        throw AmbiguityError("jost: phi0 degree law failed");
    if (tp[0].degree() > std::max(jd.nu - 2, 0))
        throw AmbiguityError("jost: theta0 degree law failed");

    jd.F = detail::state_combination(bg, tp[0], pp[0]);
    if (jd.F.degree() != jd.kappa)
        throw AmbiguityError("jost: state polynomial degree law failed");
    jd.Fdot = jd.F.deriv();
    return jd;
}

// Generalized leading-coefficient constants for the state polynomial at a
// site n <= p - 1: products over sites n..p replace the full products. They
// describe the problem re-based at n, whose visible perturbation has order
// nu - 2n; at n = p that order drops to zero and the laws below do not apply.
inline double c1_at(const Background& bg, const JostData& jd, int n) {
    double prod = (n == 0) ? bg.a0() : 1.0;
    for (int j = std::max(n, 1); j <= jd.pert.p; ++j) prod *= a_pert(bg, jd.pert, j);
    return 1.0 / prod;
}
inline double c3_at(const Background& bg, const JostData& jd, int n) {
    double c1n = c1_at(bg, jd, n);
    double c2n;
    const std::size_t up = static_cast<std::size_t>(jd.pert.p);
    if (jd.nu == 2 * jd.pert.p) {
        double ap0 = bg.a_at(jd.pert.p), ap = a_pert(bg, jd.pert, jd.pert.p);
        c2n = c1n * jd.pert.u[up - 1] * (ap0 + ap);
    } else {
        double ap0 = bg.a_at(jd.pert.p);
        c2n = c1n * ap0 * ap0 * jd.pert.v[up - 1];
    }
    return c1n * c2n;
}

// State polynomial at site n: phi_q f_n f_n(other sheet) expanded through
// the polynomial components. For 0 <= n <= p - 1 it has degree kappa - 2n
// and leading coefficient -a_0 c3(n); at n = p it collapses to the
// background polynomial scaled by (a0_p / a_p)^2, degree q - 1.
inline Poly state_polynomial(const Background& bg, const JostData& jd, int n) {
    if (n < 0 || n > jd.pert.p + 2) throw Error("state_polynomial: site out of range");
    return detail::state_combination(bg, jd.tplus[static_cast<std::size_t>(n)],
                                     jd.pplus[static_cast<std::size_t>(n)]);
}

// Jost solution value at any site: polynomial pair below p+2, scalar
// three-term recursion with background coefficients above.
inline cplx jost_f(const Background& bg, const JostData& jd, SheetPoint pt, int n) {
    if (n < 0) throw Error("jost_f: negative site");
    cplx m = weyl_m(bg, pt).first;
    if (n <= jd.pert.p + 2)
        return jd.tplus[static_cast<std::size_t>(n)](pt.lam) + m * jd.pplus[static_cast<std::size_t>(n)](pt.lam);
    cplx y0 = jd.tplus[static_cast<std::size_t>(jd.pert.p) + 1](pt.lam) +
              m * jd.pplus[static_cast<std::size_t>(jd.pert.p) + 1](pt.lam);
    cplx y1 = jd.tplus[static_cast<std::size_t>(jd.pert.p) + 2](pt.lam) +
              m * jd.pplus[static_cast<std::size_t>(jd.pert.p) + 2](pt.lam);
    for (int k = jd.pert.p + 2; k < n; ++k) {
        cplx y2 = ((pt.lam - bg.b_at(k)) * y1 - bg.a_at(k - 1) * y0) / bg.a_at(k);
        y0 = y1;
        y1 = y2;
    }
    return y1;
}

// Large-lambda deviation of F and of the second-sheet Jost value from their
// leading terms, sampled at lam and 2*lam. First-order tails make the
// deviation decay like 1/lambda, so the ratio sits near 1/2.
struct AsymptoticReport {
    double lam = 0.0;
    double dev_F_1 = 0.0, dev_F_2 = 0.0, ratio_F = 0.0;
    double dev_f_1 = 0.0, dev_f_2 = 0.0, ratio_f = 0.0;
};

inline AsymptoticReport asymptotic_residual(const Background& bg, const JostData& jd, double lam) {
    AsymptoticReport rep;
    rep.lam = lam;
    auto dev_F = [&](double x) {
        double leadv = -bg.a0() * jd.c3 * std::pow(x, jd.kappa);
        return std::fabs(jd.F(x) / leadv - 1.0);
    };
    auto dev_f = [&](double x) {
        cplx f = jd.theta0()(cplx(x, 0.0)) + weyl_m(bg, {cplx(x, 0.0), 2}).first * jd.phi0()(cplx(x, 0.0));
        double leadv = -(jd.c2 / jd.Ap) * std::pow(x, jd.nu);
        return std::abs(f / leadv - 1.0);
    };
    rep.dev_F_1 = dev_F(lam);
    rep.dev_F_2 = dev_F(2.0 * lam);
    rep.ratio_F = rep.dev_F_2 / rep.dev_F_1;
    rep.dev_f_1 = dev_f(lam);
    rep.dev_f_2 = dev_f(2.0 * lam);
    rep.ratio_f = rep.dev_f_2 / rep.dev_f_1;
    return rep;
}

} // namespace reslab
