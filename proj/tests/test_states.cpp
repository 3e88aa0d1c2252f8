#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "reslab/states.hpp"
#include "support/instances.hpp"

using namespace reslab;
using Catch::Matchers::WithinAbs;

namespace {
const double kRefBound = 3.0740852297878796; // sqrt(189/20)
}

TEST_CASE("regularizers split Dirichlet points by unperturbed state kind") {
    Background bg = testgen::worked_instance().bg;
    Regularizers reg = regularizers(bg);
    REQUIRE(reg.Mm.size() == 1); // the unperturbed state here is antibound
    CHECK_THAT(reg.Mm[0], WithinAbs(0.0, 1e-9));
    CHECK(reg.Mp.empty());
    CHECK(reg.Me.empty());
    CHECK(reg.Dp.degree() == 0);
    CHECK(reg.Dm.degree() == 1);
    CHECK_THAT(reg.Dm(2.0), WithinAbs(2.0, 1e-9));
}

TEST_CASE("reference instance: full state list") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    StatesResult st = all_states(inst.bg, site_zero(jd));

    REQUIRE(st.states.size() == 3);
    CHECK(st.kappa == 3);
    CHECK(st.warnings.empty());

    // Sorted by real part: bound at -r, collision at 0, bound at +r.
    CHECK(st.states[0].kind == StateKind::Bound);
    CHECK(st.states[0].point.sheet == 1);
    CHECK(st.states[0].gap == 0);
    CHECK_THAT(st.states[0].point.lam.real(), WithinAbs(-kRefBound, 1e-9));

    CHECK(st.states[1].kind == StateKind::Collision);
    CHECK_THAT(st.states[1].point.lam.real(), WithinAbs(0.0, 1e-9));
    CHECK(st.states[1].gap == 1);
    CHECK(st.states[1].point.sheet == 2); // mirrors the antibound unperturbed state

    CHECK(st.states[2].kind == StateKind::Bound);
    CHECK(st.states[2].point.sheet == 1);
    CHECK(st.states[2].gap == 2);
    CHECK_THAT(st.states[2].point.lam.real(), WithinAbs(kRefBound, 1e-9));

    // Tallies: one state in each gap closure; the finite gap holds only the
    // collision state, which counts toward the extended tally.
    REQUIRE(st.tallies.size() == 3);
    CHECK(st.tallies[0].with_mult == 1);
    CHECK(st.tallies[0].nbv == 1);
    CHECK(st.tallies[1].with_mult == 1);
    CHECK(st.tallies[1].nbv == 0);
    CHECK(st.tallies[1].nbv_collision == 1);
    CHECK(st.tallies[2].with_mult == 1);
    CHECK(st.tallies[2].nbv == 1);
}

TEST_CASE("reference instance: regularized values at the collision point") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    SiteZeroData sz = site_zero(jd);
    Regularizers reg = regularizers(inst.bg);

    // The growing-branch value has a pole-times-zero cancellation at 0:
    // f_0 tends to 14 while the regularizer vanishes linearly.
    cplx f2 = sz.theta0(cplx(1e-6, 0.0)) +
              weyl_m(inst.bg, {cplx(1e-6, 0.0), 2}).first * sz.phi0(cplx(1e-6, 0.0));
    CHECK(std::abs(f2 - cplx(14.0, 0.0)) < 1e-3);

    CHECK(std::abs(fhat0(inst.bg, sz, reg, {cplx(0.0, 0.0), 2})) < 1e-6);
    CHECK(std::abs(fhat0(inst.bg, sz, reg, {cplx(0.0, 0.0), 1}) - cplx(1.5, 0.0)) < 1e-6);
}

TEST_CASE("scattering values: unimodular on the band rim, regular at collisions") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    SiteZeroData sz = site_zero(jd);
    Regularizers reg = regularizers(inst.bg);

    for (double x : {-2.3, -1.7, 1.7, 2.3}) {
        cplx s = s_matrix(inst.bg, sz, cplx(x, 0.0));
        CHECK(std::abs(std::abs(s) - 1.0) < 1e-9);
        cplx sh = shat(inst.bg, sz, reg, cplx(x, 0.0));
        CHECK(std::isfinite(sh.real()));
        CHECK(std::isfinite(sh.imag()));
    }
    // At the collision point the regularized quotient stays finite (and here
    // vanishes with the numerator's regularizer).
    cplx sh0 = shat(inst.bg, sz, reg, cplx(0.0, 0.0));
    CHECK(std::abs(sh0) < 1e-5);
}

TEST_CASE("norming constants: dual routes agree at the pinned value") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    StatesResult st = all_states(inst.bg, site_zero(jd));
    auto norm = norming_constants(inst.bg, jd, st);
    REQUIRE(norm.size() == 2);
    for (const auto& e : norm) {
        CHECK_THAT(e.closed_form, WithinAbs(1.0 / 12.0, 1e-9));
        CHECK_THAT(e.series, WithinAbs(1.0 / 12.0, 1e-7));
        CHECK(e.rel_diff <= 1e-6);
    }
}

TEST_CASE("norming constants agree on random instances with bound states") {
    std::mt19937_64 rng(77125u);
    testgen::DrawOptions opt;
    opt.need_states = true;
    opt.need_bound = true;
    opt.plain_real_states = true;
    for (int trial = 0; trial < 5; ++trial) {
        auto inst = testgen::draw_instance(rng, opt);
        JostData jd = jost_polys(inst.bg, inst.pert);
        StatesResult st = all_states(inst.bg, site_zero(jd));
        auto norm = norming_constants(inst.bg, jd, st); // throws on mismatch
        REQUIRE(!norm.empty());
        for (const auto& e : norm) {
            CHECK(e.series > 0.0);
            CHECK(e.closed_form > 0.0);
            CHECK(e.rel_diff <= 1e-6);
        }
    }
}

TEST_CASE("classification covers resonances on a drawn instance") {
    std::mt19937_64 rng(3391u);
    testgen::DrawOptions opt;
    opt.need_states = true;
    opt.plain_real_states = true;
    bool saw_resonance = false;
    for (int trial = 0; trial < 8 && !saw_resonance; ++trial) {
        auto inst = testgen::draw_instance(rng, opt);
        JostData jd = jost_polys(inst.bg, inst.pert);
        StatesResult st = all_states(inst.bg, site_zero(jd));
        int total = 0;
        for (const State& s : st.states) {
            total += s.multiplicity;
            if (s.kind == StateKind::Resonance) {
                saw_resonance = true;
                CHECK(s.point.sheet == 2);
                CHECK(s.gap == -1);
                CHECK(s.point.lam.imag() != 0.0);
            }
            if (s.kind == StateKind::Bound) CHECK(s.point.sheet == 1);
            if (s.kind == StateKind::Antibound) CHECK(s.point.sheet == 2);
        }
        CHECK(total == jd.kappa); // zeros of F accounted for exactly
    }
    CHECK(saw_resonance);
}

TEST_CASE("square-root edge probe distinguishes vanishing from non-vanishing") {
    Background bg = testgen::worked_instance().bg;
    SiteZeroData sz;
    sz.nu = 1;
    sz.kappa = 2;

    // m_plus(5/2) = 1, so theta0 = 1, phi0 = -1 makes f_0 vanish at the edge
    // with square-root speed, while phi0 = +1 keeps it bounded away from 0.
    sz.theta0 = Poly::constant(1.0);
    sz.phi0 = Poly::constant(-1.0);
    CHECK(detail::confirm_virtual(bg, sz, 2.5));
    sz.phi0 = Poly::constant(1.0);
    CHECK(!detail::confirm_virtual(bg, sz, 2.5));
}

TEST_CASE("band-interior zeros and degree mismatches are rejected") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    SiteZeroData sz = site_zero(jd);

    SiteZeroData bad = sz;
    bad.kappa = 5;
    CHECK_THROWS_AS(all_states(inst.bg, bad), ClassViolationError);

    SiteZeroData interior = sz;
    interior.F = Poly::from_roots({cplx(2.0, 0.0)});
    interior.Fdot = interior.F.deriv();
    interior.kappa = 1;
    CHECK_THROWS_AS(all_states(inst.bg, interior), AmbiguityError);
}

TEST_CASE("zero set of the scattering numerator with exceptional-set flags") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    S1ZeroReport rep = zeros_S_minus_1(inst.bg, site_zero(jd));
    REQUIRE(rep.zeros.size() == 1);
    CHECK(std::abs(rep.zeros[0].lam) < 1e-9);
    CHECK(rep.zeros[0].multiplicity == 1);
    CHECK(rep.zeros[0].on_mu);
    CHECK(!rep.zeros[0].on_edge);
    CHECK(!rep.separated); // the zero meets exactly one exceptional set

    // Odd instance of order 1: the numerator is constant, no zeros at all.
    auto odd = testgen::odd_instance();
    JostData jodd = jost_polys(odd.bg, odd.pert);
    S1ZeroReport rodd = zeros_S_minus_1(odd.bg, site_zero(jodd));
    CHECK(rodd.zeros.empty());
    CHECK(rodd.separated);
}

TEST_CASE("resolvent entries solve the resolvent equation") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    SheetPoint pt{cplx(0.9, 1.1), 1};

    // Symmetry.
    cplx r24 = resolvent_entry(inst.bg, jd, 2, 4, pt);
    cplx r42 = resolvent_entry(inst.bg, jd, 4, 2, pt);
    CHECK(std::abs(r24 - r42) < 1e-12 * (1.0 + std::abs(r24)));

    // Row equation of (lambda - J) R = I at interior sites.
    auto row = [&](int m, int n) {
        cplx acc = a_pert(inst.bg, jd.pert, m) * resolvent_entry(inst.bg, jd, m + 1, n, pt) +
                   a_pert(inst.bg, jd.pert, m - 1) * resolvent_entry(inst.bg, jd, m - 1, n, pt) +
                   b_pert(inst.bg, jd.pert, m) * resolvent_entry(inst.bg, jd, m, n, pt);
        return pt.lam * resolvent_entry(inst.bg, jd, m, n, pt) - acc;
    };
    CHECK(std::abs(row(3, 5)) < 1e-10);
    CHECK(std::abs(row(4, 4) - cplx(1.0, 0.0)) < 1e-10);
}
