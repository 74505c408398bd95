// ivem_cli: convergence runs, single solves, preconditioner studies, self-verification and VTK export.
//
// Exit codes: 0 ok, 2 usage/configuration, 3 solver failure, 4 verification failure.

#include "ivem/io.hpp"
#include "ivem/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace ivem;

namespace {

constexpr int kUsage = 2, kSolver = 3, kVerify = 4;

struct SolverFailure : Error {
    using Error::Error;
};

// Settings that may come from the config file; flags given on the command line win.
struct Overrides {
    std::string config;
    bool deterministic = false;
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& key, const std::string& flag, const std::string& help) {
        app->add_option(flag, values[key], help);
    }
    void add_all(CLI::App* app) {
        app->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);
        app->add_flag("--deterministic", deterministic, "write 0 for timings so outputs are bit-identical");
        add(app, "gamma", "--gamma", "H1 stabilization weight");
        add(app, "gamma0", "--gamma0", "H(curl) mass stabilization weight");
        add(app, "gamma1", "--gamma1", "H(curl) curl stabilization weight");
        add(app, "rel_tol", "--rel-tol", "PCG relative residual tolerance");
        add(app, "snap_tol", "--snap-tol", "level-set snapping tolerance");
        add(app, "max_iter", "--max-iter", "PCG iteration cap (0: automatic)");
        add(app, "backend", "--backend", "auxiliary solver: direct, sgs, amg");
        add(app, "solver", "--solver", "auto, direct, cg, jacobi, amg, hx");
        add(app, "l", "--layers", "interface block expansion width");
        add(app, "sweeps", "--sweeps", "smoother sweeps");
    }
    RunConfig resolve() const {
        RunConfig rc;
        if (!config.empty()) load_config_file(rc, config);
        for (const auto& [k, v] : values)
            if (!v.empty()) apply_setting(rc, k, v);
        rc.timing = !deterministic;
        rc.validate();
        return rc;
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    return os;
}

// Accepts "sphere" for "h1-sphere" and so on.
std::string resolve_problem(const std::string& name) {
    const auto& all = benchmark_names();
    if (std::find(all.begin(), all.end(), name) != all.end()) return name;
    if (std::find(all.begin(), all.end(), "h1-" + name) != all.end()) return "h1-" + name;
    throw ConfigError("unknown problem: " + name);
}

double param_or_nan(const std::optional<double>& p) { return p ? *p : std::numeric_limits<double>::quiet_NaN(); }

int cmd_converge(const std::string& problem, const std::string& nlist, const std::string& out, std::optional<double> param, const RunConfig& rc) {
    auto B = make_benchmark(resolve_problem(problem), param_or_nan(param));
    auto t = run_convergence(B, parse_int_list(nlist), rc, &std::cerr);
    for (const auto& r : t.rows)
        if (!r.converged) throw SolverFailure("PCG did not converge at n=" + std::to_string(r.n));
    if (out.empty()) {
        write_convergence_csv(std::cout, t);
    } else {
        auto os = open_out(out);
        write_convergence_csv(os, t);
    }
    return 0;
}

int cmd_solve(const std::string& problem, int n, std::optional<double> param, const std::string& dump, const std::string& log_path,
              const RunConfig& rc) {
    auto B = make_benchmark(resolve_problem(problem), param_or_nan(param));
    auto c = build_case(B, n, rc);
    auto S = assemble_case(*c);
    if (!dump.empty()) {
        write_matrix_market(dump + "_A.mtx", S.A);
        write_vector(dump + "_b.txt", S.b);
        std::cerr << "wrote " << dump << "_A.mtx and " << dump << "_b.txt\n";
    }
    auto sol = solve_case(*c, S, rc);
    if (!log_path.empty()) write_iteration_log(log_path, sol.cg);
    if (!sol.converged) {
        std::cerr << "residual history:";
        for (double r : sol.cg.residuals) std::cerr << " " << r;
        std::cerr << "\n";
        throw SolverFailure("PCG did not converge in " + std::to_string(sol.iterations) + " iterations");
    }
    auto e = compute_errors(c->T, sol.x, B);
    std::cout << "problem " << B.name << " n " << n << " dofs " << e.dof_total << " interface_dofs " << e.dof_interface << "\n"
              << "iterations " << sol.iterations << " seconds " << fmt(rc.timing ? sol.seconds : 0.0) << "\n"
              << "err_L2 " << fmt(e.err_L2) << " err_Linf " << fmt(e.err_Linf) << " err_energy " << fmt(e.err_energy) << "\n";
    return 0;
}

int cmd_precond(const std::string& rlist, const std::string& llist, int n, const std::string& out, const RunConfig& rc) {
    auto rows = run_precond_study(parse_int_list(rlist), parse_int_list(llist), n, rc, &std::cerr);
    if (out.empty()) {
        write_precond_csv(std::cout, rows);
    } else {
        auto os = open_out(out);
        write_precond_csv(os, rows);
    }
    for (const auto& r : rows)
        if (!r.converged) throw SolverFailure("HX-PCG did not converge at r=" + std::to_string(r.r) + " l=" + std::to_string(r.l));
    return 0;
}

int cmd_verify(const RunConfig& rc0) {
    bool ok = true;
    auto line = [&](bool pass, const std::string& what) {
        std::cout << (pass ? "ok   " : "FAIL ") << what << "\n";
        ok = ok && pass;
    };
    for (const auto& name : benchmark_names()) {
        auto B = make_benchmark(name);
        double j = check_jumps(B), r = check_residual(B);
        line(j <= 1e-10 && r <= 1e-5, "benchmark " + name + ": jumps " + fmt(j) + ", residual " + fmt(r));
    }
    auto d = run_derham_suite({2, 4});
    line(d.ok(1e-10), "de Rham: " + std::to_string(d.meshes) + " meshes, commuting " + fmt(d.commuting));
    for (const auto& f : d.failures) std::cout << "     " << f << "\n";
    RunConfig rc = rc0;
    rc.solver = SolverKind::Direct;
    for (const char* name : {"h1-patch", "hcurl-patch"}) {
        auto e = run_case(make_benchmark(name), 8, rc);
        double worst = std::max({e.err_L2, e.err_energy, std::isnan(e.err_Linf) ? 0.0 : e.err_Linf});
        line(worst <= 1e-8, std::string("patch ") + name + ": max error " + fmt(worst));
    }
    auto p = run_projection_suite(1000, 7);
    line(p.ok(1e-11, 1e-10), "projections: " + std::to_string(p.tests) + " tests, reproduction " + fmt(p.reproduction) + ", orthogonality " +
                                 fmt(p.orthogonality));
    return ok ? 0 : kVerify;
}

int cmd_export(const std::string& problem, int n, const std::string& vtk, const std::string& boundary, const RunConfig& rc) {
    auto B = make_benchmark(resolve_problem(problem));
    BackgroundMesh m = build_background_mesh(n, B.box);
    CutOptions opt;
    opt.snap_tol = rc.snap_tol;
    CutMesh cm = classify_and_cut(m, B.ls, opt);
    write_vtk_mesh(vtk, m, cm);
    if (!boundary.empty()) write_vtk_boundary(boundary, cm);
    std::cerr << "n " << n << " elements " << m.num_elements() << " interface elements " << cm.num_interface() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Immersed virtual elements for H1 and H(curl) interface problems"};
    app.require_subcommand(1);
    Overrides ov;

    std::string problem, nlist = "8,16,24", out, dump, iter_log, rlist = "0..4", llist = "0,1,2", vtk, boundary;
    int n = 16, pn = 12, en = 8;
    std::optional<double> param;

    auto* converge = app.add_subcommand("converge", "errors and convergence slopes over a list of meshes");
    converge->add_option("--problem", problem, "benchmark name")->required();
    converge->add_option("--nlist", nlist, "mesh sizes, e.g. 8,16,24 or 8..12");
    converge->add_option("--out", out, "CSV output (default stdout)");
    converge->add_option("--param", param, "beta+ for h1 problems, r for hcurl-flat");
    ov.add_all(converge);

    auto* solve = app.add_subcommand("solve", "one solve with error report");
    solve->add_option("--problem", problem, "benchmark name")->required();
    solve->add_option("--n", n, "cells per direction")->check(CLI::PositiveNumber);
    solve->add_option("--param", param, "beta+ for h1 problems, r for hcurl-flat");
    solve->add_option("--dump-system", dump, "write PREFIX_A.mtx and PREFIX_b.txt");
    solve->add_option("--iter-log", iter_log, "write the PCG residual history");
    ov.add_all(solve);

    auto* precond = app.add_subcommand("precond", "HX iteration counts on the flat small-cut family");
    precond->add_option("--rlist", rlist, "interface offsets r");
    precond->add_option("--llist", llist, "block widths l");
    precond->add_option("--n", pn, "cells per direction")->check(CLI::PositiveNumber);
    precond->add_option("--out", out, "CSV output (default stdout)");
    ov.add_all(precond);

    auto* verify = app.add_subcommand("verify", "de Rham, patch and projection self-checks");
    ov.add_all(verify);

    auto* exportm = app.add_subcommand("export-mesh", "write the cut mesh as legacy VTK");
    exportm->add_option("--problem", problem, "benchmark name")->required();
    exportm->add_option("--n", en, "cells per direction")->check(CLI::PositiveNumber);
    exportm->add_option("--vtk", vtk, "background mesh output")->required();
    exportm->add_option("--boundary-vtk", boundary, "boundary triangulation output");
    ov.add_all(exportm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        RunConfig rc = ov.resolve();
        if (*converge) return cmd_converge(problem, nlist, out, param, rc);
        if (*solve) return cmd_solve(problem, n, param, dump, iter_log, rc);
        if (*precond) return cmd_precond(rlist, llist, pn, out, rc);
        if (*verify) return cmd_verify(rc);
        if (*exportm) return cmd_export(problem, en, vtk, boundary, rc);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolver;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kUsage;
}
