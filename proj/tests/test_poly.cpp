#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>
#include <vector>

#include "reslab/poly.hpp"

using namespace reslab;
using Catch::Matchers::WithinAbs;

TEST_CASE("polynomial basics: trim, degree, evaluation, arithmetic") {
    Poly z;
    CHECK(z.is_zero());
    CHECK(z.degree() == -1);
    CHECK(z(3.0) == 0.0);
    CHECK(z.lead() == 0.0);

    Poly p(std::vector<double>{1.0, -2.0, 0.0, 0.0}); // trailing zeros trimmed
    CHECK(p.degree() == 1);
    CHECK(p.lead() == -2.0);
    CHECK(p(0.5) == 0.0);
    CHECK(p.coef(0) == 1.0);
    CHECK(p.coef(7) == 0.0);

    Poly q(std::vector<double>{0.0, 0.0, 3.0});
    CHECK((p + q).degree() == 2);
    CHECK((p * q).degree() == 3);
    CHECK((p * q)(2.0) == p(2.0) * q(2.0));
    CHECK((p - p).is_zero());
    CHECK((2.0 * p)(1.5) == 2.0 * p(1.5));
    CHECK((-p)(1.5) == -p(1.5));

    // Tolerance-trimming constructor drops structural-cancellation residue.
    Poly t(std::vector<double>{1.0, 1e-15, 1e-15}, 1e-12);
    CHECK(t.degree() == 0);

    // Derivative.
    Poly d = (p * q).deriv();
    cplx x(0.3, -0.7);
    cplx h(1e-6, 0.0);
    cplx fd = ((p * q)(x + h) - (p * q)(x - h)) / (2.0 * h);
    CHECK(std::abs(d(x) - fd) < 1e-6);
}

TEST_CASE("complex evaluation matches Horner by hand") {
    Poly p(std::vector<double>{-1.0, 0.0, 2.0}); // 2x^2 - 1
    cplx x(1.0, 1.0);
    cplx want = 2.0 * x * x - 1.0;
    CHECK(std::abs(p(x) - want) < 1e-15);
}

TEST_CASE("from_roots builds real coefficients and round-trips") {
    std::vector<cplx> rs = {cplx(1.0, 0.0), cplx(-2.0, 0.0), cplx(0.5, 1.5), cplx(0.5, -1.5)};
    Poly p = Poly::from_roots(rs, 3.0);
    CHECK(p.degree() == 4);
    CHECK_THAT(p.lead(), WithinAbs(3.0, 1e-12));
    for (const auto& r : rs) CHECK(std::abs(p(r)) < 1e-10 * p.scale_at(std::abs(r)));

    // Unpaired complex roots are rejected.
    CHECK_THROWS_AS(Poly::from_roots({cplx(0.0, 1.0)}), ClassViolationError);
}

TEST_CASE("root finder recovers simple real and complex roots") {
    std::vector<cplx> want = {cplx(-3.0, 0.0), cplx(0.25, 0.0), cplx(2.0, 0.0),
                              cplx(1.0, 2.0),  cplx(1.0, -2.0)};
    Poly p = Poly::from_roots(want, -0.7);
    RootSet rs = roots(p);
    REQUIRE(rs.total_multiplicity() == 5);
    REQUIRE(rs.roots.size() == 5);
    // Sorted by (Re, Im): -3, 0.25, (1,-2), (1,2), 2.
    CHECK(std::abs(rs.roots[0].value - want[0]) < 1e-9);
    CHECK(std::abs(rs.roots[1].value - want[1]) < 1e-9);
    CHECK(std::abs(rs.roots[2].value - cplx(1.0, -2.0)) < 1e-9);
    CHECK(std::abs(rs.roots[3].value - cplx(1.0, 2.0)) < 1e-9);
    CHECK(std::abs(rs.roots[4].value - want[2]) < 1e-9);
    // Conjugate pairing is exact after symmetrization.
    CHECK(rs.roots[2].value == std::conj(rs.roots[3].value));
    for (const auto& r : rs.roots) CHECK(r.residual < 1e-10);
}

TEST_CASE("root finder clusters a double root with multiplicity 2") {
    // (x - 1)^2 (x + 2)
    Poly p = Poly::from_roots({cplx(1.0), cplx(1.0), cplx(-2.0)});
    RootSet rs = roots(p);
    CHECK(rs.total_multiplicity() == 3);
    bool found_double = false;
    for (const auto& r : rs.roots)
        if (r.multiplicity == 2 && std::abs(r.value - cplx(1.0)) < 1e-5) found_double = true;
    CHECK(found_double);
}

TEST_CASE("root finder handles wide dynamic range and many roots") {
    std::mt19937 rng(20240811u);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<cplx> want;
        for (int k = 0; k < 4; ++k) want.push_back(cplx(U(rng), 0.0));
        double re = U(rng), im = 0.5 + std::fabs(U(rng));
        want.push_back(cplx(re, im));
        want.push_back(cplx(re, -im));
        Poly p = Poly::from_roots(want, 1.0 + std::fabs(U(rng)));
        RootSet rs = roots(p);
        REQUIRE(rs.total_multiplicity() == 6);
        for (const auto& w : want) {
            double best = 1e300;
            for (const auto& r : rs.roots) best = std::min(best, std::abs(r.value - w));
            CHECK(best < 1e-6);
        }
    }
}

TEST_CASE("least-squares interpolation recovers exact polynomials") {
    Poly p(std::vector<double>{2.0, -1.0, 0.0, 0.5}); // 0.5x^3 - x + 2
    std::vector<std::pair<cplx, cplx>> pts;
    for (int k = 0; k < 9; ++k) {
        cplx x(std::cos(0.7 * k) * 2.0, std::sin(1.1 * k));
        pts.push_back({x, p(x)});
    }
    double resid = 0.0;
    Poly got = interpolate(pts, 3, &resid);
    CHECK(resid < 1e-10);
    for (int k = 0; k <= 3; ++k) CHECK_THAT(got.coef(k), WithinAbs(p.coef(k), 1e-9));

    CHECK_THROWS_AS(interpolate(pts, 12), AmbiguityError); // more unknowns than rows
    auto dup = pts;
    dup.push_back(pts[0]);
    CHECK_THROWS_AS(interpolate(dup, 3), AmbiguityError);
}
