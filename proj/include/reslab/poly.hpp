#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace reslab {

using cplx = std::complex<double>;

// Dense real polynomial in one variable, coefficients stored in ascending
// degree order: coef[k] multiplies lambda^k. The zero polynomial is stored
// as an empty coefficient vector and reports degree -1.
class Poly {
  public:
    Poly() = default;

    explicit Poly(std::vector<double> coef) : c_(std::move(coef)) { trim(0.0); }

    // Trims trailing coefficients with magnitude <= tol (absolute).
    Poly(std::vector<double> coef, double tol) : c_(std::move(coef)) { trim(tol); }

    static Poly constant(double v) { return Poly(std::vector<double>{v}); }

    static Poly monomial(int deg, double lead = 1.0) {
        std::vector<double> c(static_cast<std::size_t>(deg) + 1, 0.0);
        c.back() = lead;
        return Poly(std::move(c));
    }

    // Monic-by-default product of (lambda - r_j); a complex root list must be
    // closed under conjugation within `pair_tol`, otherwise the coefficients
    // would not be real.
    static Poly from_roots(const std::vector<cplx>& roots, double lead = 1.0,
                           double pair_tol = 1e-9);

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }

    double lead() const { return c_.empty() ? 0.0 : c_.back(); }

    double coef(int k) const {
        return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(k)] : 0.0;
    }

    const std::vector<double>& coefs() const { return c_; }

    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
        return acc;
    }

    cplx operator()(cplx x) const {
        cplx acc = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
        return acc;
    }

    Poly deriv() const {
        if (c_.size() <= 1) return Poly();
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Poly(std::move(d));
    }

    // Sum of |coef_k| x^k; used to bound roundoff when combinations of
    // polynomials cancel structurally.
    Poly abs() const {
        std::vector<double> a(c_.size());
        for (std::size_t k = 0; k < c_.size(); ++k) a[k] = std::fabs(c_[k]);
        return Poly(std::move(a));
    }

    // Magnitude scale of the polynomial at |lambda| = r: sum |c_k| r^k.
    double scale_at(double r) const {
        double acc = 0.0, p = 1.0;
        for (double ck : c_) {
            acc += std::fabs(ck) * p;
            p *= r;
        }
        return acc;
    }

    double max_abs_coef() const {
        double m = 0.0;
        for (double ck : c_) m = std::max(m, std::fabs(ck));
        return m;
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
        return Poly(std::move(c));
    }

    friend Poly operator-(const Poly& a, const Poly& b) {
        std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] -= b.c_[k];
        return Poly(std::move(c));
    }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly();
        std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        return Poly(std::move(c));
    }

    friend Poly operator*(double s, const Poly& a) {
        std::vector<double> c(a.c_);
        for (double& ck : c) ck *= s;
        return Poly(std::move(c));
    }

    friend Poly operator-(const Poly& a) { return -1.0 * a; }

  private:
    void trim(double tol) {
        while (!c_.empty() && std::fabs(c_.back()) <= tol) c_.pop_back();
    }

    std::vector<double> c_;
};

// One cluster of numerically coincident roots.
struct Root {
    cplx value;
    int multiplicity = 1;
    double residual = 0.0; // |p(value)| relative to the coefficient scale at |value|
};

// Root list of a polynomial; multiplicities sum to the degree.
struct RootSet {
    std::vector<Root> roots;

    int total_multiplicity() const {
        int s = 0;
        for (const auto& r : roots) s += r.multiplicity;
        return s;
    }
};

namespace detail {

inline void horner2(const std::vector<double>& c, cplx z, cplx& p, cplx& dp) {
    p = 0.0;
    dp = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[i];
    }
}

// Aberth-Ehrlich simultaneous iteration. Input must have a nonzero leading
// coefficient; returns deg unpolished roots.
inline std::vector<cplx> aberth(const std::vector<double>& coef) {
    const int n = static_cast<int>(coef.size()) - 1;
    std::vector<cplx> z(static_cast<std::size_t>(n));

    // Cauchy bound for |root|, used as the initial circle radius.
    double radius = 0.0;
    for (int k = 0; k < n; ++k) radius = std::max(radius, std::fabs(coef[static_cast<std::size_t>(k)] / coef.back()));
    radius = 1.0 + radius;

    const double twopi = 6.283185307179586476925287;
    for (int k = 0; k < n; ++k) {
        double ang = twopi * (static_cast<double>(k) + 0.5) / static_cast<double>(n) + 0.43;
        z[static_cast<std::size_t>(k)] = 0.7 * radius * cplx(std::cos(ang), std::sin(ang));
    }

    for (int iter = 0; iter < 600; ++iter) {
        bool all_small = true;
        for (int k = 0; k < n; ++k) {
            cplx p, dp;
            horner2(coef, z[static_cast<std::size_t>(k)], p, dp);
            if (p == cplx(0.0)) continue;
            cplx w;
            if (dp == cplx(0.0)) {
                w = cplx(1e-8, 1e-8); // nudge off a stationary point
            } else {
                w = p / dp;
            }
            cplx s = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != k) s += 1.0 / (z[static_cast<std::size_t>(k)] - z[static_cast<std::size_t>(j)]);
            cplx denom = 1.0 - w * s;
            cplx step = (std::abs(denom) < 1e-300) ? w : w / denom;
            z[static_cast<std::size_t>(k)] -= step;
            if (std::abs(step) > 1e-14 * (1.0 + std::abs(z[static_cast<std::size_t>(k)]))) all_small = false;
        }
        if (all_small) break;
    }
    return z;
}

} // namespace detail

// All complex roots with clustering and conjugate symmetrization.
//
// Roots closer than cluster_tol_factor * max(1, |root|) are merged into one
// cluster whose multiplicity is the member count. Roots with imaginary part
// below the same scale are snapped to the real axis; the remaining complex
// ones are averaged into exact conjugate pairs. The multiplicities always
// sum to the degree.
inline RootSet roots(const Poly& p, double cluster_tol_factor = 1e-7) {
    RootSet out;
    if (p.degree() <= 0) return out;

    std::vector<cplx> z = detail::aberth(p.coefs());

    // Newton polish against the original coefficients; keeps simple roots at
    // full precision and is a no-op for defective clusters (step rejected if
    // the residual does not improve).
    for (auto& zk : z) {
        for (int it = 0; it < 8; ++it) {
            cplx pv, dpv;
            detail::horner2(p.coefs(), zk, pv, dpv);
            if (std::abs(dpv) < 1e-300) break;
            cplx step = pv / dpv;
            cplx znew = zk - step;
            cplx pn, dn;
            detail::horner2(p.coefs(), znew, pn, dn);
            if (std::abs(pn) >= std::abs(pv)) break;
            zk = znew;
            if (std::abs(step) <= 1e-16 * (1.0 + std::abs(zk))) break;
        }
    }

    // Snap near-real roots to the axis.
    for (auto& zk : z)
        if (std::fabs(zk.imag()) <= cluster_tol_factor * std::max(1.0, std::abs(zk))) zk = cplx(zk.real(), 0.0);

    // Greedy clustering. n is small (<= ~40), quadratic is fine.
    const std::size_t n = z.size();
    std::vector<int> cluster(n, -1);
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        if (cluster[i] >= 0) continue;
        groups.push_back({i});
        cluster[i] = static_cast<int>(groups.size()) - 1;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (cluster[j] >= 0) continue;
            double tol = cluster_tol_factor * std::max({1.0, std::abs(z[i]), std::abs(z[j])});
            if (std::abs(z[i] - z[j]) <= tol) {
                groups.back().push_back(j);
                cluster[j] = cluster[i];
            }
        }
    }

    for (const auto& g : groups) {
        cplx mean = 0.0;
        for (std::size_t idx : g) mean += z[idx];
        mean /= static_cast<double>(g.size());
        if (std::fabs(mean.imag()) <= cluster_tol_factor * std::max(1.0, std::abs(mean)))
            mean = cplx(mean.real(), 0.0);
        Root r;
        r.value = mean;
        r.multiplicity = static_cast<int>(g.size());
        out.roots.push_back(r);
    }

    // Average complex clusters into exact conjugate pairs.
    std::vector<bool> used(out.roots.size(), false);
    for (std::size_t i = 0; i < out.roots.size(); ++i) {
        if (used[i] || out.roots[i].value.imag() == 0.0) continue;
        std::size_t best = i;
        double bestd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < out.roots.size(); ++j) {
            if (j == i || used[j] || out.roots[j].value.imag() == 0.0) continue;
            double d = std::abs(std::conj(out.roots[i].value) - out.roots[j].value);
            if (d < bestd) {
                bestd = d;
                best = j;
            }
        }
        if (best != i && bestd <= 1e-6 * std::max(1.0, std::abs(out.roots[i].value))) {
            cplx v = 0.5 * (out.roots[i].value + std::conj(out.roots[best].value));
            if (out.roots[i].value.imag() < 0) v = std::conj(v);
            out.roots[i].value = v;
            out.roots[best].value = std::conj(v);
            used[i] = used[best] = true;
        }
    }

    for (auto& r : out.roots) {
        double s = p.scale_at(std::abs(r.value));
        r.residual = (s > 0.0) ? std::abs(p(r.value)) / s : std::abs(p(r.value));
    }

    std::sort(out.roots.begin(), out.roots.end(), [](const Root& a, const Root& b) {
        if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
        return a.value.imag() < b.value.imag();
    });
    return out;
}

inline Poly Poly::from_roots(const std::vector<cplx>& roots, double lead, double pair_tol) {
    // Validate conjugate closure, then multiply linear/quadratic real factors.
    std::vector<cplx> rem = roots;
    std::vector<double> acc{lead};
    auto mul_linear = [&acc](double r) {
        std::vector<double> next(acc.size() + 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            next[i + 1] += acc[i];
            next[i] -= r * acc[i];
        }
        acc = std::move(next);
    };
    auto mul_quadratic = [&acc](double s, double p2) {
        // factor lambda^2 - s lambda + p2
        std::vector<double> next(acc.size() + 2, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            next[i + 2] += acc[i];
            next[i + 1] -= s * acc[i];
            next[i] += p2 * acc[i];
        }
        acc = std::move(next);
    };
    while (!rem.empty()) {
        cplx r = rem.back();
        rem.pop_back();
        if (std::fabs(r.imag()) <= pair_tol * std::max(1.0, std::abs(r))) {
            mul_linear(r.real());
            continue;
        }
        auto it = std::min_element(rem.begin(), rem.end(), [&](cplx a, cplx b) {
            return std::abs(a - std::conj(r)) < std::abs(b - std::conj(r));
        });
        if (it == rem.end() || std::abs(*it - std::conj(r)) > pair_tol * std::max(1.0, std::abs(r)) * 10.0)
            throw ClassViolationError("from_roots: complex roots are not closed under conjugation");
        cplx mate = *it;
        rem.erase(it);
        cplx v = 0.5 * (r + std::conj(mate));
        mul_quadratic(2.0 * v.real(), std::norm(v));
    }
    return Poly(std::move(acc));
}

// Least-squares polynomial fit of the given degree through (x_j, y_j) with
// complex nodes and values; the result has real coefficients (real and
// imaginary parts of every equation become separate rows). Throws on
// duplicate nodes; reports the max-norm residual through `residual_out`.
inline Poly interpolate(const std::vector<std::pair<cplx, cplx>>& points, int deg,
                        double* residual_out = nullptr) {
    if (deg < 0) throw Error("interpolate: negative degree");
    const std::size_t n = points.size();
    const std::size_t ncoef = static_cast<std::size_t>(deg) + 1;
    if (n < ncoef) throw AmbiguityError("interpolate: fewer nodes than coefficients");

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(points[i].first - points[j].first) <=
                1e-12 * std::max(1.0, std::abs(points[i].first)))
                throw AmbiguityError("interpolate: duplicate nodes");

    // Real and imaginary parts of each Vandermonde equation become two rows,
    // so the coefficient vector stays real.
    Mat A(2 * n, ncoef);
    std::vector<double> b(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx pw = 1.0;
        for (std::size_t j = 0; j < ncoef; ++j) {
            A(2 * i, j) = pw.real();
            A(2 * i + 1, j) = pw.imag();
            pw *= points[i].first;
        }
        b[2 * i] = points[i].second.real();
        b[2 * i + 1] = points[i].second.imag();
    }
    double resid = 0.0;
    std::vector<double> x = qr_lstsq(std::move(A), std::move(b), &resid);
    if (residual_out) *residual_out = resid;
    return Poly(std::move(x));
}

} // namespace reslab
