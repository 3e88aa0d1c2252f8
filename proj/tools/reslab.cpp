// Command-line front end: band structure, direct state computation, inverse
// reconstruction, and self-check suites over JSON problem files.
//
// Exit codes: 0 success, 1 generic failure, 2 parse error, 3 ambiguity
// (numerically unresolvable), 4 class violation (input outside the operator
// class), 5 gate error (data rejected by a consistency gate).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reslab/reslab.hpp"

using namespace reslab;

namespace {

std::string read_input(const std::string& path) {
    if (path.empty() || path == "-") return slurp(std::cin);
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open input file: " + path);
    return slurp(in);
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    out << text;
}

unsigned env_seed() {
    if (const char* s = std::getenv("RESLAB_SEED")) return static_cast<unsigned>(std::strtoul(s, nullptr, 10));
    return 12345u;
}

const char* j0_kind_name(J0Kind k) {
    switch (k) {
        case J0Kind::Bound: return "bound";
        case J0Kind::Antibound: return "antibound";
        case J0Kind::Virtual: return "virtual";
    }
    return "?";
}

std::string matrix_json(const Mat& m) {
    return jw::Obj()
        .field_int("rows", static_cast<long long>(m.rows))
        .field_int("cols", static_cast<long long>(m.cols))
        .field("data", jw::arr(m.a))
        .done();
}

// ---- bands ------------------------------------------------------------------

int run_bands(const std::string& input, const std::string& out) {
    ProblemFile pf = parse_problem(read_input(input));
    Background bg = background_from_problem(pf);

    std::string bands = "[";
    for (std::size_t i = 0; i < bg.bands.bands.size(); ++i) {
        if (i) bands += ",";
        bands += "[" + jw::num(bg.bands.bands[i][0]) + "," + jw::num(bg.bands.bands[i][1]) + "]";
    }
    bands += "]";

    std::string gaps = "[";
    for (std::size_t i = 0; i < bg.bands.gaps.size(); ++i) {
        const GapInfo& g = bg.bands.gaps[i];
        if (i) gaps += ",";
        gaps += jw::Obj()
                    .field_int("index", g.j)
                    .field_num("lo", g.lo)
                    .field_num("hi", g.hi)
                    .field_bool("closed", g.closed)
                    .field_num("dirichlet", g.mu)
                    .field_num("neumann", g.nu_pt)
                    .field_num("critical", g.alpha)
                    .field_num("height", g.h)
                    .done();
    }
    gaps += "]";

    std::string states = "[";
    for (std::size_t i = 0; i < bg.j0_states.size(); ++i) {
        const J0State& s = bg.j0_states[i];
        if (i) states += ",";
        states += jw::Obj()
                      .field_int("gap", s.gap)
                      .field_num("lam", s.mu)
                      .field_str("kind", j0_kind_name(s.kind))
                      .done();
    }
    states += "]";

    std::string text = jw::Obj()
                           .field_int("q", bg.q)
                           .field("a", jw::arr(bg.a))
                           .field("b", jw::arr(bg.b))
                           .field("edges", jw::arr(bg.bands.edges))
                           .field("bands", bands)
                           .field("gaps", gaps)
                           .field("background_states", states)
                           .done() +
                       "\n";
    write_output(out, text);
    return 0;
}

// ---- direct -----------------------------------------------------------------

int run_direct(const std::string& input, const std::string& out, double tol) {
    ProblemFile pf = parse_problem(read_input(input));
    if (pf.pert.p < 1) throw ParseError("direct: problem file carries no perturbation (p, u, v)");
    Background bg = background_from_problem(pf);
    JostData jd = jost_polys(bg, pf.pert);

    StatesOptions opt;
    opt.root_residual_tol = tol;
    StatesResult st = all_states(bg, site_zero(jd), opt);
    auto norm = norming_constants(bg, jd, st);
    S1ZeroReport s1 = zeros_S_minus_1(bg, site_zero(jd));

    write_output(out, write_states(make_states_file(bg, jd, st, norm, s1)));
    return 0;
}

// ---- inverse ----------------------------------------------------------------

int run_inverse(const std::string& input, const std::string& out, const std::string& method,
                const std::string& background_path, int L, double gate, bool dump_grid) {
    StatesFile sf = parse_states(read_input(input));

    Background bg;
    if (!background_path.empty()) {
        std::ifstream in(background_path);
        if (!in) throw ParseError("cannot open background file: " + background_path);
        bg = background_from_problem(parse_problem(slurp(in)));
    } else {
        bg = build_background(sf.q, sf.a0, sf.b0);
    }

    JostCandidate cand;
    if (method == "glm") {
        cand = make_candidate(bg, Poly(sf.theta0), Poly(sf.phi0), sf.c1, sf.c2);
    } else if (method == "interp") {
        cand = reconstruct_interpolation(bg, Poly(sf.F), Poly(sf.phi0), sf.states);
    } else { // s1
        cand = reconstruct_from_s1_zeros(bg, Poly(sf.F), sf.s1_zeros, sf.c2, sf.states);
    }

    ScatteringData sd = scattering_from_candidate(bg, cand);
    InverseResult res = invert_scattering(bg, sd, L, gate);

    jw::Obj o;
    o.field_int("q", bg.q)
        .field("a0", jw::arr(bg.a))
        .field("b0", jw::arr(bg.b))
        .field_int("p", res.pert.p)
        .field("u", jw::arr(res.pert.u))
        .field("v", jw::arr(res.pert.v))
        .field_int("nu", res.nu)
        .field_str("method", method);
    if (dump_grid) {
        std::string glm = jw::Obj()
                              .field_int("L", res.kernel.L)
                              .field_int("nodes", res.kernel.nodes)
                              .field_num("vanish_residual", res.kernel.vanish_residual)
                              .field("input_matrix", matrix_json(res.kernel.F))
                              .field("kernel", matrix_json(res.K))
                              .done();
        o.field("glm", glm);
    }
    write_output(out, o.done() + "\n");
    return 0;
}

// ---- check ------------------------------------------------------------------

int run_check(const std::string& input, const std::string& suite) {
    ProblemFile pf = parse_problem(read_input(input));
    Background bg = background_from_problem(pf);
    bool have_pert = pf.pert.p >= 1;
    JostData jd;
    if (have_pert) jd = jost_polys(bg, pf.pert);

    int bad = 0;
    auto line = [&](bool ok, const std::string& name, const std::string& detail) {
        std::cout << (ok ? "ok   " : "FAIL ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
        if (!ok) ++bad;
    };

    if (suite == "identities" || suite == "all") {
        for (const IdentityCheck& c : identity_suite(bg, have_pert ? &jd : nullptr, env_seed())) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "residual %.3e", c.residual);
            line(c.residual <= c.tol, "identity: " + c.name, buf);
        }
        {
            double r = measure_convention_residual(bg);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "residual %.3e", r);
            line(r < 1e-6, "identity: spectral-measure convention", buf);
        }
    }

    if (suite == "oracle" || suite == "all") {
        if (!have_pert) throw ParseError("check --suite oracle: problem file carries no perturbation");
        StatesResult st = all_states(bg, site_zero(jd));
        std::vector<double> bound;
        for (const State& s : st.states)
            if (s.kind == StateKind::Bound) bound.push_back(s.point.lam.real());
        std::sort(bound.begin(), bound.end());
        std::vector<double> sec = stable_gap_eigenvalues(bg, pf.pert, 1200);
        bool ok = sec.size() == bound.size();
        double worst = 0.0;
        if (ok)
            for (std::size_t i = 0; i < bound.size(); ++i)
                worst = std::max(worst, std::fabs(bound[i] - sec[i]));
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu bound state(s), max deviation %.3e", bound.size(), worst);
        line(ok && worst < 1e-6, "oracle: finite-section bound states", buf);

        auto [K, resid] = k_kernel_least_squares(bg, jd);
        std::snprintf(buf, sizeof(buf), "fit residual %.3e", resid);
        line(resid < 1e-6, "oracle: band-sample transformation kernel", buf);
    }

    if (suite == "roundtrip" || suite == "all") {
        if (!have_pert) throw ParseError("check --suite roundtrip: problem file carries no perturbation");
        JostCandidate cand = make_candidate(bg, jd.theta0(), jd.phi0(), jd.c1, jd.c2);
        ScatteringData sd = scattering_from_candidate(bg, cand);
        InverseResult res = invert_scattering(bg, sd);
        double dev = (res.pert.p == pf.pert.p) ? 0.0 : 1.0;
        auto at = [](const std::vector<double>& xs, int i) {
            return (i < static_cast<int>(xs.size())) ? xs[static_cast<std::size_t>(i)] : 0.0;
        };
        for (int i = 0; i < std::max(res.pert.p, pf.pert.p); ++i) {
            dev = std::max(dev, std::fabs(at(res.pert.u, i) - at(pf.pert.u, i)));
            dev = std::max(dev, std::fabs(at(res.pert.v, i) - at(pf.pert.v, i)));
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "max coefficient deviation %.3e", dev);
        line(dev < 1e-6, "roundtrip: scattering data reconstructs the coefficients", buf);
    }

    return bad == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral analysis of perturbed periodic half-lattice Jacobi operators"};
    app.require_subcommand(1);

    std::string input, out, method = "glm", background_path, suite = "all";
    double tol = 1e-8, gate = 1e-8;
    int L = -1;
    bool dump_grid = false;

    CLI::App* bands = app.add_subcommand("bands", "Band structure of the periodic background");
    bands->add_option("input", input, "problem JSON (default: stdin)");
    bands->add_option("--out", out, "output path (default: stdout)");

    CLI::App* direct = app.add_subcommand("direct", "All states of the perturbed operator");
    direct->add_option("input", input, "problem JSON (default: stdin)");
    direct->add_option("--out", out, "output path (default: stdout)");
    direct->add_option("--tol", tol, "root residual gate (default 1e-8)");

    CLI::App* inverse = app.add_subcommand("inverse", "Reconstruct the perturbation from a state report");
    inverse->add_option("input", input, "state report JSON (default: stdin)");
    inverse->add_option("--out", out, "output path (default: stdout)");
    inverse->add_option("--method", method, "glm | interp | s1 (default glm)")
        ->check(CLI::IsMember({"glm", "interp", "s1"}));
    inverse->add_option("--background", background_path, "problem JSON overriding the report's background");
    inverse->add_option("--L", L, "kernel size (default: order + 2)");
    inverse->add_option("--gate", gate, "kernel vanish gate (default 1e-8)");
    inverse->add_flag("--dump-grid", dump_grid, "include the kernel matrices in the output");

    CLI::App* check = app.add_subcommand("check", "Self-verification suites on a problem file");
    check->add_option("input", input, "problem JSON (default: stdin)");
    check->add_option("--suite", suite, "identities | oracle | roundtrip | all")
        ->check(CLI::IsMember({"identities", "oracle", "roundtrip", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (bands->parsed()) return run_bands(input, out);
        if (direct->parsed()) return run_direct(input, out, tol);
        if (inverse->parsed()) return run_inverse(input, out, method, background_path, L, gate, dump_grid);
        if (check->parsed()) return run_check(input, suite);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const AmbiguityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ClassViolationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const GateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
