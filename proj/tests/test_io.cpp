#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "reslab/io.hpp"
#include "support/instances.hpp"

using namespace reslab;

TEST_CASE("problem files: exact round trip and deterministic bytes") {
    ProblemFile pf;
    pf.q = 2;
    pf.a0 = {2.0, 0.5};
    pf.b0 = {0.0, 0.0};
    pf.pert = {1, {1.0}, {0.0}};

    std::string text = write_problem(pf);
    CHECK(text == "{\"q\":2,\"a0\":[2,0.5],\"b0\":[0,0],\"p\":1,\"u\":[1],\"v\":[0]}\n");
    CHECK(text == write_problem(pf)); // byte-stable

    ProblemFile back = parse_problem(text);
    CHECK(back.q == pf.q);
    CHECK(back.a0 == pf.a0);
    CHECK(back.b0 == pf.b0);
    CHECK(back.pert.p == 1);
    CHECK(back.pert.u == pf.pert.u);
    CHECK(back.pert.v == pf.pert.v);

    // Non-dyadic values survive the %.17g round trip exactly.
    ProblemFile pf2;
    pf2.q = 3;
    pf2.a0 = {1.0 / 3.0, 0.123456789012345678, 3.0};
    pf2.b0 = {-0.1, 0.2, 1e-17};
    ProblemFile back2 = parse_problem(write_problem(pf2));
    CHECK(back2.a0 == pf2.a0);
    CHECK(back2.b0 == pf2.b0);
    CHECK(back2.pert.p == 0); // background-only file

    Background bg = background_from_problem(pf);
    CHECK(bg.q == 2);
    CHECK(bg.a0() == 0.5);
}

TEST_CASE("problem files: parse failures raise typed errors") {
    CHECK_THROWS_AS(parse_problem("not json"), ParseError);
    CHECK_THROWS_AS(parse_problem("[1,2]"), ParseError);
    CHECK_THROWS_AS(parse_problem("{\"a0\":[1],\"b0\":[0]}"), ParseError);
    CHECK_THROWS_AS(parse_problem("{\"q\":2,\"a0\":7,\"b0\":[0,0]}"), ParseError);
    CHECK_THROWS_AS(parse_problem("{\"q\":2,\"a0\":[2,0.5],\"b0\":[0,0],\"u\":[1]}"), ParseError);
    CHECK_THROWS_AS(parse_problem("{\"q\":2.5,\"a0\":[2,0.5],\"b0\":[0,0]}"), ParseError);
}

TEST_CASE("state reports: full round trip of the reference instance") {
    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    StatesResult st = all_states(inst.bg, site_zero(jd));
    auto norm = norming_constants(inst.bg, jd, st);
    S1ZeroReport s1 = zeros_S_minus_1(inst.bg, site_zero(jd));

    StatesFile sf = make_states_file(inst.bg, jd, st, norm, s1);
    std::string text = write_states(sf);
    CHECK(text == write_states(sf)); // byte-stable
    CHECK(text.back() == '\n');

    StatesFile back = parse_states(text);
    CHECK(back.version == 1);
    CHECK(back.q == 2);
    CHECK(back.a0 == inst.bg.a);
    CHECK(back.b0 == inst.bg.b);
    CHECK(back.c1 == jd.c1);
    CHECK(back.c2 == jd.c2);
    CHECK(back.c3 == jd.c3);
    CHECK(back.nu == 2);
    CHECK(back.kappa == 3);
    CHECK(back.F == jd.F.coefs());
    CHECK(back.theta0 == jd.theta0().coefs());
    CHECK(back.phi0 == jd.phi0().coefs());

    REQUIRE(back.states.size() == st.states.size());
    for (std::size_t i = 0; i < back.states.size(); ++i) {
        CHECK(back.states[i].point.lam == st.states[i].point.lam);
        CHECK(back.states[i].point.sheet == st.states[i].point.sheet);
        CHECK(back.states[i].kind == st.states[i].kind);
        CHECK(back.states[i].multiplicity == st.states[i].multiplicity);
        CHECK(back.states[i].gap == st.states[i].gap);
    }
    REQUIRE(back.norming.size() == 2);
    CHECK(back.norming[0].closed_form == norm[0].closed_form);
    CHECK(back.norming[0].gap == norm[0].gap);
    REQUIRE(back.s1_zeros.size() == 1);
    CHECK(back.s1_zeros[0].on_mu);
    CHECK(!back.s1_zeros[0].on_edge);
    CHECK(back.s1_separated == s1.separated);
    CHECK(back.warnings == st.warnings);
}

TEST_CASE("state reports: unknown kinds and missing fields are rejected") {
    CHECK_THROWS_AS(parse_states("{}"), ParseError);
    CHECK_THROWS_AS(parse_states("nope"), ParseError);

    auto inst = testgen::worked_instance();
    JostData jd = jost_polys(inst.bg, inst.pert);
    StatesResult st = all_states(inst.bg, site_zero(jd));
    StatesFile sf = make_states_file(inst.bg, jd, st, {}, {});
    std::string text = write_states(sf);
    std::string corrupted = text;
    auto pos = corrupted.find("\"bound\"");
    REQUIRE(pos != std::string::npos);
    corrupted.replace(pos, 7, "\"blorp\"");
    CHECK_THROWS_AS(parse_states(corrupted), ParseError);
}

TEST_CASE("string escaping survives the writer") {
    jw::Obj o;
    o.field_str("note", "line\nbreak \"quoted\" back\\slash\ttab");
    std::string s = o.done();
    auto j = nlohmann::json::parse(s);
    CHECK(j["note"] == "line\nbreak \"quoted\" back\\slash\ttab");
}

TEST_CASE("slurp reads a whole stream") {
    std::istringstream in("alpha\nbeta");
    CHECK(slurp(in) == "alpha\nbeta");
}
