#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inverse.hpp"

namespace reslab {

// ---- deterministic JSON writer -------------------------------------------
//
// Output must be byte-stable across runs, so values are written by hand in
// a fixed key order with %.17g floats (shortest round-trip form). Parsing
// stays on the vendored library.

namespace jw {

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    std::string s(buf);
    // Bare integers and specials still have to be valid JSON numbers.
    if (s == "inf") return "1e308";
    if (s == "-inf") return "-1e308";
    if (s == "nan" || s == "-nan") return "null";
    return s;
}

inline std::string str(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

inline std::string arr(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += num(xs[i]);
    }
    out += "]";
    return out;
}

// Minimal ordered-object builder: fields are emitted in insertion order.
class Obj {
public:
    Obj& field(const std::string& key, const std::string& rawvalue) {
        if (!body_.empty()) body_ += ",";
        body_ += str(key) + ":" + rawvalue;
        return *this;
    }
    Obj& field_num(const std::string& key, double v) { return field(key, num(v)); }
    Obj& field_int(const std::string& key, long long v) { return field(key, std::to_string(v)); }
    Obj& field_str(const std::string& key, const std::string& v) { return field(key, str(v)); }
    Obj& field_bool(const std::string& key, bool v) { return field(key, v ? "true" : "false"); }
    std::string done() const { return "{" + body_ + "}"; }

private:
    std::string body_;
};

} // namespace jw

// ---- problem files ---------------------------------------------------------

struct ProblemFile {
    int q = 0;
    std::vector<double> a0, b0;
    Perturbation pert;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"");
    return *it;
}

inline double as_num(const nlohmann::json& j, const char* what) {
    if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
    return j.get<double>();
}

inline int as_int(const nlohmann::json& j, const char* what) {
    if (!j.is_number_integer()) throw ParseError(std::string(what) + " must be an integer");
    return j.get<int>();
}

inline std::vector<double> as_vec(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(as_num(e, what));
    return out;
}

} // namespace detail

inline ProblemFile parse_problem(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("problem file must be a JSON object");
    ProblemFile pf;
    pf.q = detail::as_int(detail::require(j, "q"), "q");
    pf.a0 = detail::as_vec(detail::require(j, "a0"), "a0");
    pf.b0 = detail::as_vec(detail::require(j, "b0"), "b0");
    if (j.contains("p")) {
        pf.pert.p = detail::as_int(j["p"], "p");
        pf.pert.u = detail::as_vec(detail::require(j, "u"), "u");
        pf.pert.v = detail::as_vec(detail::require(j, "v"), "v");
    } else if (j.contains("u") || j.contains("v")) {
        throw ParseError("u/v present without p");
    }
    return pf;
}

inline std::string write_problem(const ProblemFile& pf) {
    jw::Obj o;
    o.field_int("q", pf.q).field("a0", jw::arr(pf.a0)).field("b0", jw::arr(pf.b0));
    if (pf.pert.p > 0) {
        o.field_int("p", pf.pert.p).field("u", jw::arr(pf.pert.u)).field("v", jw::arr(pf.pert.v));
    }
    return o.done() + "\n";
}

// ---- state reports ---------------------------------------------------------

struct StatesFile {
    int version = 1;
    int q = 0;
    std::vector<double> a0, b0;
    double c1 = 0, c2 = 0, c3 = 0, Ap = 0;
    int nu = 0, kappa = 0;
    std::vector<double> F, theta0, phi0;
    std::vector<State> states;
    std::vector<NormingEntry> norming;
    std::vector<S1Zero> s1_zeros;
    bool s1_separated = false;
    std::vector<std::string> warnings;
};

inline StatesFile make_states_file(const Background& bg, const JostData& jd, const StatesResult& st,
                                   const std::vector<NormingEntry>& norm, const S1ZeroReport& s1) {
    StatesFile sf;
    sf.q = bg.q;
    sf.a0 = bg.a;
    sf.b0 = bg.b;
    sf.c1 = jd.c1;
    sf.c2 = jd.c2;
    sf.c3 = jd.c3;
    sf.Ap = jd.Ap;
    sf.nu = jd.nu;
    sf.kappa = jd.kappa;
    sf.F = jd.F.coefs();
    sf.theta0 = jd.theta0().coefs();
    sf.phi0 = jd.phi0().coefs();
    sf.states = st.states;
    sf.norming = norm;
    sf.s1_zeros = s1.zeros;
    sf.s1_separated = s1.separated;
    sf.warnings = st.warnings;
    return sf;
}

inline std::string write_states(const StatesFile& sf) {
    std::string states = "[";
    for (std::size_t i = 0; i < sf.states.size(); ++i) {
        const State& s = sf.states[i];
        if (i) states += ",";
        states += jw::Obj()
                      .field_num("re", s.point.lam.real())
                      .field_num("im", s.point.lam.imag())
                      .field_int("sheet", s.point.sheet)
                      .field_str("kind", to_string(s.kind))
                      .field_int("multiplicity", s.multiplicity)
                      .field_int("gap", s.gap)
                      .field_num("residual", s.residual)
                      .done();
    }
    states += "]";

    std::string norm = "[";
    for (std::size_t i = 0; i < sf.norming.size(); ++i) {
        if (i) norm += ",";
        norm += jw::Obj()
                    .field_num("lam", sf.norming[i].lam)
                    .field_int("gap", sf.norming[i].gap)
                    .field_num("value", sf.norming[i].closed_form)
                    .field_num("rel_diff", sf.norming[i].rel_diff)
                    .done();
    }
    norm += "]";

    std::string zeros = "[";
    for (std::size_t i = 0; i < sf.s1_zeros.size(); ++i) {
        const S1Zero& z = sf.s1_zeros[i];
        if (i) zeros += ",";
        zeros += jw::Obj()
                     .field_num("re", z.lam.real())
                     .field_num("im", z.lam.imag())
                     .field_int("multiplicity", z.multiplicity)
                     .field_bool("on_dirichlet", z.on_mu)
                     .field_bool("on_edge", z.on_edge)
                     .done();
    }
    zeros += "]";

    std::string warn = "[";
    for (std::size_t i = 0; i < sf.warnings.size(); ++i) {
        if (i) warn += ",";
        warn += jw::str(sf.warnings[i]);
    }
    warn += "]";

    std::string background = jw::Obj()
                                 .field_int("q", sf.q)
                                 .field("a", jw::arr(sf.a0))
                                 .field("b", jw::arr(sf.b0))
                                 .done();
    std::string constants = jw::Obj()
                                .field_num("c1", sf.c1)
                                .field_num("c2", sf.c2)
                                .field_num("c3", sf.c3)
                                .field_num("Ap", sf.Ap)
                                .field_int("nu", sf.nu)
                                .field_int("kappa", sf.kappa)
                                .done();

    return jw::Obj()
               .field_int("version", sf.version)
               .field("background", background)
               .field("constants", constants)
               .field("F", jw::arr(sf.F))
               .field("theta0_plus", jw::arr(sf.theta0))
               .field("phi0_plus", jw::arr(sf.phi0))
               .field("states", states)
               .field("norming", norm)
               .field("s1_zeros", zeros)
               .field_bool("s1_separated", sf.s1_separated)
               .field("warnings", warn)
               .done() +
           "\n";
}

inline StatesFile parse_states(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("states file must be a JSON object");
    StatesFile sf;
    sf.version = detail::as_int(detail::require(j, "version"), "version");
    const auto& bgj = detail::require(j, "background");
    sf.q = detail::as_int(detail::require(bgj, "q"), "background.q");
    sf.a0 = detail::as_vec(detail::require(bgj, "a"), "background.a");
    sf.b0 = detail::as_vec(detail::require(bgj, "b"), "background.b");
    const auto& cj = detail::require(j, "constants");
    sf.c1 = detail::as_num(detail::require(cj, "c1"), "constants.c1");
    sf.c2 = detail::as_num(detail::require(cj, "c2"), "constants.c2");
    sf.c3 = detail::as_num(detail::require(cj, "c3"), "constants.c3");
    sf.Ap = detail::as_num(detail::require(cj, "Ap"), "constants.Ap");
    sf.nu = detail::as_int(detail::require(cj, "nu"), "constants.nu");
    sf.kappa = detail::as_int(detail::require(cj, "kappa"), "constants.kappa");
    sf.F = detail::as_vec(detail::require(j, "F"), "F");
    sf.theta0 = detail::as_vec(detail::require(j, "theta0_plus"), "theta0_plus");
    sf.phi0 = detail::as_vec(detail::require(j, "phi0_plus"), "phi0_plus");
    for (const auto& sj : detail::require(j, "states")) {
        State s;
        s.point.lam = cplx(detail::as_num(detail::require(sj, "re"), "state.re"),
                           detail::as_num(detail::require(sj, "im"), "state.im"));
        s.point.sheet = detail::as_int(detail::require(sj, "sheet"), "state.sheet");
        std::string kind = detail::require(sj, "kind").get<std::string>();
        if (kind == "bound") s.kind = StateKind::Bound;
        else if (kind == "antibound") s.kind = StateKind::Antibound;
        else if (kind == "resonance") s.kind = StateKind::Resonance;
        else if (kind == "virtual") s.kind = StateKind::Virtual;
        else if (kind == "collision") s.kind = StateKind::Collision;
        else throw ParseError("unknown state kind \"" + kind + "\"");
        s.multiplicity = detail::as_int(detail::require(sj, "multiplicity"), "state.multiplicity");
        s.gap = detail::as_int(detail::require(sj, "gap"), "state.gap");
        s.residual = detail::as_num(detail::require(sj, "residual"), "state.residual");
        sf.states.push_back(std::move(s));
    }
    for (const auto& nj : detail::require(j, "norming")) {
        NormingEntry n;
        n.lam = detail::as_num(detail::require(nj, "lam"), "norming.lam");
        n.gap = detail::as_int(detail::require(nj, "gap"), "norming.gap");
        n.closed_form = n.series = detail::as_num(detail::require(nj, "value"), "norming.value");
        n.rel_diff = detail::as_num(detail::require(nj, "rel_diff"), "norming.rel_diff");
        sf.norming.push_back(n);
    }
    for (const auto& zj : detail::require(j, "s1_zeros")) {
        S1Zero z;
        z.lam = cplx(detail::as_num(detail::require(zj, "re"), "s1_zero.re"),
                     detail::as_num(detail::require(zj, "im"), "s1_zero.im"));
        z.multiplicity = detail::as_int(detail::require(zj, "multiplicity"), "s1_zero.multiplicity");
        z.on_mu = detail::require(zj, "on_dirichlet").get<bool>();
        z.on_edge = detail::require(zj, "on_edge").get<bool>();
        sf.s1_zeros.push_back(z);
    }
    sf.s1_separated = detail::require(j, "s1_separated").get<bool>();
    for (const auto& wj : detail::require(j, "warnings")) sf.warnings.push_back(wj.get<std::string>());
    return sf;
}

// ---- convenience -----------------------------------------------------------

inline std::string slurp(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Background background_from_problem(const ProblemFile& pf) { return build_background(pf.q, pf.a0, pf.b0); }

} // namespace reslab
