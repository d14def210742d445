/// @file ncpoly_cli.hpp
/// @brief argument parsing and command dispatch for the `ncpoly` tool
///
/// Exit codes: 0 all gates pass, 1 a gated check failed, 2 usage error,
/// 3 I/O error, 4 numerical failure.
#pragma once

#include <ncpoly/ncpoly.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ncpoly::cli {

enum ExitCode : int { kPass = 0, kGateFailed = 1, kUsage = 2, kIo = 3, kNumerical = 4 };

inline constexpr std::array<std::string_view, 5> kCommands{"mesh-check", "element-props", "interp-study", "solve-study",
                                                          "patch-test"};

struct RunConfig {
    std::string command;
    int dim = 2;
    std::vector<int> n{4, 8, 16, 32};
    std::string element = "p1nc";
    std::string coeff = "laplace";
    std::string mesh = "tensor";
    double delta = 0.2;
    std::uint64_t seed = 7;
    int quad_k = 4;
    double tol = 1e-10;
    int max_iters = 0; ///< 0: 10 * n_dofs
    bool jacobi = false;
    int oracle_max_dofs = 400;
    int samples = 1000;
    std::string out = ".";
    bool dump_system = false;
    bool reproducible = false;
    bool quiet = false;
};

struct ParseOutcome {
    std::optional<RunConfig> config; ///< empty: exit with `exit_code`
    int exit_code = kPass;
    std::string message;
};

class IoError : public Error {
  public:
    using Error::Error;
};

[[nodiscard]] inline MeshFamily parse_family(const std::string& s) {
    if (s == "tensor") return MeshFamily::tensor;
    if (s == "shear") return MeshFamily::shear;
    if (s == "perturb2d") return MeshFamily::perturb2d;
    throw InvalidArgument("unknown mesh family '" + s + "'");
}

/// cross-field checks that CLI11 validators cannot express
[[nodiscard]] inline std::string validate(const RunConfig& cfg) {
    const auto kind = parse_element_kind(cfg.element);
    if (!kind) return "unknown element '" + cfg.element + "'";
    if (!supports_dimension(*kind, cfg.dim))
        return "element " + cfg.element + " supports dimensions " + supported_dimensions(*kind) + ", got --dim " +
               std::to_string(cfg.dim);
    if (!coefficient_preset(cfg.coeff, cfg.dim)) return "unknown coefficient preset '" + cfg.coeff + "'";
    if (cfg.mesh == "perturb2d" && cfg.dim != 2) return "--mesh perturb2d requires --dim 2";
    if (cfg.mesh == "perturb2d" && !(cfg.delta >= 0.0 && cfg.delta < 1.0)) return "--delta must lie in [0, 1)";
    if (cfg.n.empty()) return "--n needs at least one value";
    for (std::size_t i = 0; i < cfg.n.size(); ++i) {
        if (cfg.n[i] < 1) return "--n values must be positive";
        if (i > 0 && cfg.n[i] <= cfg.n[i - 1]) return "--n values must be strictly increasing";
    }
    const bool study = cfg.command == "interp-study" || cfg.command == "solve-study";
    if (study && cfg.n.size() < 3) return "rate fitting needs at least three meshes in --n";
    if (cfg.command == "interp-study" && *kind != ElementKind::p1nc) return "interp-study supports --element p1nc only";
    if (cfg.command == "patch-test" && *kind != ElementKind::p1nc) return "patch-test supports --element p1nc only";
    if (cfg.command == "mesh-check" && *kind != ElementKind::p1nc && cfg.mesh == "perturb2d")
        return "baseline elements need parallelotope cells";
    if (cfg.command == "solve-study" && *kind != ElementKind::p1nc && cfg.mesh == "perturb2d")
        return "baseline elements need parallelotope cells";
    return {};
}

/// Parses the command line. Flags override values from `--config`; unknown
/// config keys are rejected.
[[nodiscard]] inline ParseOutcome parse_config(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"Nonconforming P1 elements on parallelotope meshes: checks, studies and patch tests", "ncpoly"};
    app.set_config("--config", "", "key = value file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_option("command", cfg.command, "mesh-check | element-props | interp-study | solve-study | patch-test")
        ->required()
        ->check(CLI::IsMember(std::vector<std::string>(kCommands.begin(), kCommands.end())));
    app.add_option("--dim", cfg.dim, "spatial dimension")->check(CLI::Range(2, kMaxDim))->capture_default_str();
    app.add_option("--n", cfg.n, "subdivisions per axis, comma separated")->delimiter(',')->capture_default_str();
    app.add_option("--element", cfg.element, "p1nc | cr | rq1-point | rq1-integral | dssy1 | dssy2")
        ->capture_default_str();
    app.add_option("--coeff", cfg.coeff, "laplace | helmholtz-like | varcoef")->capture_default_str();
    app.add_option("--mesh", cfg.mesh, "tensor | shear | perturb2d")
        ->check(CLI::IsMember({"tensor", "shear", "perturb2d"}))
        ->capture_default_str();
    app.add_option("--delta", cfg.delta, "perturb2d vertex displacement, fraction of the spacing")->capture_default_str();
    app.add_option("--seed", cfg.seed, "RNG seed for perturbed meshes and random samples")->capture_default_str();
    app.add_option("--quad-k", cfg.quad_k, "Gauss points per axis")->check(CLI::Range(1, 20))->capture_default_str();
    app.add_option("--tol", cfg.tol, "CG relative residual tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--max-iters", cfg.max_iters, "CG iteration cap (0: 10 x n_dofs)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_flag("--jacobi", cfg.jacobi, "Jacobi-preconditioned CG");
    app.add_option("--oracle-max-dofs", cfg.oracle_max_dofs, "dense Cholesky cross-check up to this many DOFs")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--samples", cfg.samples, "random samples for element-props")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--out", cfg.out, "output directory for report.csv / report.json")->capture_default_str();
    app.add_flag("--dump-system", cfg.dump_system, "write system.mtx and rhs.txt of the finest mesh");
    app.add_flag("--reproducible", cfg.reproducible, "write zero timings so reports are byte-identical across runs");
    app.add_flag("-q,--quiet", cfg.quiet, "suppress the per-row console output");

    ParseOutcome outcome;
    if (argc <= 1) {
        outcome.exit_code = kUsage;
        outcome.message = app.help();
        return outcome;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        outcome.exit_code = kPass;
        outcome.message = app.help();
        return outcome;
    } catch (const CLI::ParseError& e) {
        outcome.exit_code = kUsage;
        outcome.message = std::string(e.what()) + "\nRun with --help for more information.";
        return outcome;
    }
    if (const std::string err = validate(cfg); !err.empty()) {
        outcome.exit_code = kUsage;
        outcome.message = err;
        return outcome;
    }
    outcome.config = cfg;
    return outcome;
}

// ==========
// = Output =
// ==========

namespace detail {

[[nodiscard]] inline nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

[[nodiscard]] inline nlohmann::json config_json(const RunConfig& cfg) {
    return {{"command", cfg.command}, {"dim", cfg.dim},         {"n", cfg.n},
            {"element", cfg.element}, {"coeff", cfg.coeff},     {"mesh", cfg.mesh},
            {"delta", cfg.delta},     {"seed", cfg.seed},       {"quad_k", cfg.quad_k},
            {"tol", cfg.tol},         {"max_iters", cfg.max_iters}, {"jacobi", cfg.jacobi},
            {"oracle_max_dofs", cfg.oracle_max_dofs}, {"samples", cfg.samples},
            {"reproducible", cfg.reproducible}};
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

inline void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

inline void finish_output(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw IoError("error while writing " + path.string());
}

} // namespace detail

/// CSV with columns h, n_dofs, err_l2, err_h1_broken, iters, seconds
inline void write_report_csv(std::ostream& os, const ErrorReport& rep, bool reproducible) {
    os << "h,n_dofs,err_l2,err_h1_broken,iters,seconds\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rep.rows)
        os << r.h << ',' << r.n_dofs << ',' << r.err_l2 << ',' << r.err_h1_broken << ',' << r.iters << ','
           << (reproducible ? 0.0 : r.seconds) << '\n';
}

[[nodiscard]] inline nlohmann::json report_json(const ErrorReport& rep, bool reproducible) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"n", r.n},
                        {"h", r.h},
                        {"n_dofs", r.n_dofs},
                        {"err_l2", r.err_l2},
                        {"err_h1_broken", r.err_h1_broken},
                        {"iters", r.iters},
                        {"seconds", reproducible ? 0.0 : r.seconds},
                        {"oracle_rel_diff", detail::finite_or_null(r.oracle_rel_diff)}});
    const RateWindows win;
    return {{"study", rep.study},
            {"rows", rows},
            {"rates",
             {{"defined", rep.rates_defined},
              {"l2", detail::finite_or_null(rep.rate_l2)},
              {"h1_broken", detail::finite_or_null(rep.rate_h1)},
              {"pairwise_l2", rep.pairwise_l2},
              {"pairwise_h1_broken", rep.pairwise_h1},
              {"window_l2", {win.l2_low, win.l2_high}},
              {"window_h1_broken", {win.h1_low, win.h1_high}}}}};
}

/// a named gated check
struct Gate {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CommandResult {
    nlohmann::json body = nlohmann::json::object();
    std::vector<Gate> gates;
    std::optional<ErrorReport> report; ///< studies write report.csv as well
};

// ============
// = Commands =
// ============

namespace detail {

[[nodiscard]] inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

[[nodiscard]] inline MeshSpec mesh_spec(const RunConfig& cfg) {
    return {parse_family(cfg.mesh), cfg.dim, cfg.delta, cfg.seed};
}

[[nodiscard]] inline std::vector<Mesh> build_meshes(const RunConfig& cfg) {
    std::vector<Mesh> meshes;
    for (int n : cfg.n) meshes.push_back(build_family_mesh(mesh_spec(cfg), n));
    return meshes;
}

inline CommandResult mesh_check(const RunConfig& cfg, std::ostream& log) {
    CommandResult res;
    const ElementKind kind = *parse_element_kind(cfg.element);
    nlohmann::json meshes = nlohmann::json::array();
    bool dims_ok = true;
    double worst_midpoint = 0.0;
    for (int n : cfg.n) {
        const Mesh mesh = build_family_mesh(mesh_spec(cfg), n);
        const MidpointReport mid = validate_midpoint_lemma(mesh);
        worst_midpoint = std::max(worst_midpoint, mid.max_relative);
        int n_dofs = 0;
        std::string warning;
        if (kind == ElementKind::crouzeix_raviart) {
            const DofMap map = build_dof_map(kuhn_subdivide(mesh));
            n_dofs = map.n_dofs;
            warning = map.warning;
        } else {
            const DofMap map = build_dof_map(mesh, kind);
            n_dofs = map.n_dofs;
            warning = map.warning;
        }
        // the P1-NC space has one DOF per interior vertex
        if (kind == ElementKind::p1nc && n_dofs != mesh.n_interior_vertices()) dims_ok = false;
        if (!cfg.quiet) {
            log << "n=" << n << " cells=" << mesh.n_cells() << " vertices=" << mesh.n_vertices()
                << " facets=" << mesh.n_facets() << " interior_facets=" << mesh.n_interior_facets()
                << " interior_vertices=" << mesh.n_interior_vertices() << " n_dofs=" << n_dofs
                << " midpoint_dev=" << fmt(mid.max_relative) << '\n';
            if (!warning.empty()) log << "warning: " << warning << '\n';
        }
        nlohmann::json m = {{"n", n},
                            {"h", mesh.h()},
                            {"cells", mesh.n_cells()},
                            {"vertices", mesh.n_vertices()},
                            {"facets", mesh.n_facets()},
                            {"interior_facets", mesh.n_interior_facets()},
                            {"interior_vertices", mesh.n_interior_vertices()},
                            {"n_dofs", n_dofs},
                            {"midpoint_max_relative", mid.max_relative}};
        if (!warning.empty()) m["warning"] = warning;
        meshes.push_back(m);
    }
    res.body["meshes"] = meshes;
    if (parse_family(cfg.mesh) != MeshFamily::perturb2d)
        res.gates.push_back({"midpoint_lemma", worst_midpoint <= 1e-12, "max relative deviation " + fmt(worst_midpoint)});
    if (kind == ElementKind::p1nc)
        res.gates.push_back({"dofs_equal_interior_vertices", dims_ok, dims_ok ? "" : "mismatch"});
    return res;
}

/// random nondegenerate affine image of [0,1]^d
[[nodiscard]] inline Mesh random_parallelotope(int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Mesh unit = build_tensor_grid(d, 1);
    for (;;) {
        Mat a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = u(rng) + (i == j ? 2.0 : 0.0);
        Point b(d);
        for (int i = 0; i < d; ++i) b[i] = 3.0 * u(rng);
        const double sv = a.jacobiSvd().singularValues().minCoeff();
        if (sv > 0.2) return apply_affine_map(unit, a, b);
    }
}

inline CommandResult element_props(const RunConfig& cfg, std::ostream& log) {
    CommandResult res;
    const ElementKind kind = *parse_element_kind(cfg.element);
    const int d = cfg.dim;
    if (kind == ElementKind::p1nc) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double midpoint = 0.0;
        double roundtrip = 0.0;
        int rejected = 0;
        for (int s = 0; s < cfg.samples; ++s) {
            const Mesh cell = random_parallelotope(d, rng);
            midpoint = std::max(midpoint, validate_midpoint_lemma(cell).max_relative);
            LocalP1 p;
            p.a0 = u(rng);
            p.grad = Vec(d);
            for (int i = 0; i < d; ++i) p.grad[i] = u(rng);
            const FacetValues fv = facet_values_of(p, cell, 0);
            const FacetValues back = facet_values_of(solve_local_from_facet_values(cell, 0, fv), cell, 0);
            for (int k = 0; k < 2 * d; ++k)
                roundtrip = std::max(roundtrip, std::abs(back.values[k] - fv.values[k]) / fv.scale());
            FacetValues bad = fv;
            bad.at(d - 1, 1) += 1e-3 * fv.scale() + 1e-5;
            try {
                (void)solve_local_from_facet_values(cell, 0, bad);
            } catch (const ConstraintViolation&) {
                ++rejected;
            }
        }
        if (!cfg.quiet)
            log << "samples=" << cfg.samples << " midpoint_dev=" << fmt(midpoint) << " roundtrip_err=" << fmt(roundtrip)
                << " rejected=" << rejected << '/' << cfg.samples << '\n';
        res.body["p1nc"] = {{"samples", cfg.samples},
                            {"midpoint_max_relative", midpoint},
                            {"roundtrip_max_relative", roundtrip},
                            {"inadmissible_rejected", rejected}};
        res.gates.push_back({"midpoint_lemma", midpoint <= 1e-12, fmt(midpoint)});
        res.gates.push_back({"unisolvency_roundtrip", roundtrip <= 1e-10, fmt(roundtrip)});
        res.gates.push_back({"inadmissible_rejected", rejected == cfg.samples,
                             std::to_string(rejected) + "/" + std::to_string(cfg.samples)});
    }
    const ReferenceBasis basis(kind, d);
    const double duality = duality_error(basis);
    res.body["duality_error"] = duality;
    res.gates.push_back({"dof_duality", duality <= 1e-12, fmt(duality)});
    if (!cfg.quiet) log << "element=" << cfg.element << " dim=" << d << " duality_err=" << fmt(duality) << '\n';
    if (is_cube_kind(kind) && kind != ElementKind::p1nc) {
        const MvpReport mvp = mvp_check(kind, d);
        nlohmann::json rows = nlohmann::json::array();
        for (int k = 0; k < mvp.generator_deviation.rows(); ++k) {
            std::vector<double> row(mvp.generator_deviation.cols());
            for (int f = 0; f < mvp.generator_deviation.cols(); ++f) row[f] = mvp.generator_deviation(k, f);
            rows.push_back(row);
        }
        res.body["mvp"] = {{"max_deviation", mvp.max_deviation}, {"generator_deviation", rows}};
        if (!cfg.quiet) log << "mvp_max_deviation=" << fmt(mvp.max_deviation) << '\n';
        // DSSY is built to satisfy the mean value property; rotated Q1 is not
        if (kind == ElementKind::dssy1 || kind == ElementKind::dssy2)
            res.gates.push_back({"mean_value_property", mvp.max_deviation <= 1e-12, fmt(mvp.max_deviation)});
    }
    return res;
}

inline void log_rows(const ErrorReport& rep, std::ostream& log) {
    for (const auto& r : rep.rows)
        log << "n=" << r.n << " h=" << fmt(r.h) << " n_dofs=" << r.n_dofs << " err_l2=" << fmt(r.err_l2)
            << " err_h1_broken=" << fmt(r.err_h1_broken) << " iters=" << r.iters << '\n';
    log << "rate_l2=" << fmt(rep.rate_l2) << " rate_h1_broken=" << fmt(rep.rate_h1) << '\n';
}

inline void rate_gates(const ErrorReport& rep, CommandResult& res) {
    const RateWindows win;
    res.gates.push_back({"rates_defined", rep.rates_defined, rep.rates_defined ? "" : "errors at round-off level"});
    if (!rep.rates_defined) return;
    res.gates.push_back({"rate_l2", win.l2_ok(rep.rate_l2), fmt(rep.rate_l2)});
    res.gates.push_back({"rate_h1_broken", win.h1_ok(rep.rate_h1), fmt(rep.rate_h1)});
}

inline CommandResult interp_study(const RunConfig& cfg, std::ostream& log) {
    CommandResult res;
    const MeshSpec spec = mesh_spec(cfg);
    const ErrorReport rep = interpolation_study(family_solution(spec), build_meshes(cfg), cfg.quad_k, cfg.n);
    if (!cfg.quiet) log_rows(rep, log);
    rate_gates(rep, res);
    res.report = rep;
    return res;
}

inline CommandResult solve_study_cmd(const RunConfig& cfg, std::ostream& log) {
    CommandResult res;
    const MeshSpec spec = mesh_spec(cfg);
    const std::vector<Mesh> meshes = build_meshes(cfg);
    StudyOptions opts;
    opts.quad_k = cfg.quad_k;
    opts.solver = {cfg.tol, cfg.max_iters > 0 ? cfg.max_iters : -1, cfg.jacobi};
    opts.oracle_max_dofs = cfg.oracle_max_dofs;
    if (cfg.dump_system) {
        opts.on_system = [&cfg, last = meshes.size() - 1](std::size_t m, const SparseSystem& sys) {
            if (m != last) return;
            const std::filesystem::path dir(cfg.out);
            auto mtx = open_output(dir / "system.mtx");
            write_matrix_market(mtx, sys.matrix);
            finish_output(mtx, dir / "system.mtx");
            auto rhs = open_output(dir / "rhs.txt");
            write_vector(rhs, sys.rhs);
            finish_output(rhs, dir / "rhs.txt");
        };
    }
    const ErrorReport rep = solve_study(*coefficient_preset(cfg.coeff, cfg.dim), family_solution(spec), meshes,
                                        *parse_element_kind(cfg.element), opts, cfg.n);
    if (!cfg.quiet) log_rows(rep, log);
    rate_gates(rep, res);
    double oracle = 0.0;
    bool checked = false;
    for (const auto& r : rep.rows)
        if (std::isfinite(r.oracle_rel_diff)) {
            oracle = std::max(oracle, r.oracle_rel_diff);
            checked = true;
        }
    if (checked) res.gates.push_back({"dense_oracle", oracle <= 1e-8, fmt(oracle)});
    res.report = rep;
    return res;
}

/// constant SPD tensor with off-diagonal coupling
[[nodiscard]] inline Mat patch_tensor(int d) {
    Mat a = Mat::Identity(d, d) * 2.0;
    for (int i = 0; i + 1 < d; ++i) a(i, i + 1) = a(i + 1, i) = 0.5;
    return a;
}

[[nodiscard]] inline Vec patch_gradient(int d) {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = 1.0 - 0.75 * i;
    return g;
}

inline CommandResult patch_test(const RunConfig& cfg, std::ostream& log) {
    CommandResult res;
    const int d = cfg.dim;
    const double a0 = 0.3;
    const Vec grad = patch_gradient(d);
    const LocalP1 exact{a0, grad};
    const ScalarFn g = [&](const Point& x) { return exact(x); };
    const CoefficientField field = constant_coefficients(patch_tensor(d), 0.0, 0.0);
    nlohmann::json rows = nlohmann::json::array();
    double worst = 0.0;
    for (const Mesh& mesh : build_meshes(cfg)) {
        const P1ncSpace space(mesh, BoundaryMode::facet_mean_dirichlet);
        const int max_iters = cfg.max_iters > 0 ? cfg.max_iters : -1;
        const DiscreteSolution sol =
            solve_problem(space, field, tensor_gauss_rule(d, cfg.quad_k), {cfg.tol, max_iters, cfg.jacobi}, g);
        const auto cells = space.to_piecewise(sol.entity_values);
        double dev = 0.0;
        for (int c = 0; c < mesh.n_cells(); ++c) {
            // compare the per-cell linear coefficients, anchored at the cell center
            const Point xc = mesh.cell_center(c);
            dev = std::max(dev, std::abs(cells[c](xc) - exact(xc)));
            dev = std::max(dev, (cells[c].grad - grad).cwiseAbs().maxCoeff());
        }
        worst = std::max(worst, dev);
        if (!cfg.quiet)
            log << "cells=" << mesh.n_cells() << " n_dofs=" << space.dofs().n_dofs << " iters=" << sol.solve.iterations
                << " max_coeff_dev=" << fmt(dev) << '\n';
        rows.push_back({{"cells", mesh.n_cells()},
                        {"n_dofs", space.dofs().n_dofs},
                        {"iters", sol.solve.iterations},
                        {"max_coefficient_deviation", dev}});
    }
    res.body["rows"] = rows;
    res.gates.push_back({"linear_reproduced", worst <= 1e-8, fmt(worst)});
    return res;
}

} // namespace detail

/// Runs the command and writes report.json (and report.csv for studies) to cfg.out.
/// Errors are mapped onto the documented exit codes.
[[nodiscard]] inline int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        detail::ensure_directory(cfg.out);
        CommandResult res;
        if (cfg.command == "mesh-check") res = detail::mesh_check(cfg, log);
        else if (cfg.command == "element-props") res = detail::element_props(cfg, log);
        else if (cfg.command == "interp-study") res = detail::interp_study(cfg, log);
        else if (cfg.command == "solve-study") res = detail::solve_study_cmd(cfg, log);
        else if (cfg.command == "patch-test") res = detail::patch_test(cfg, log);
        else throw InvalidArgument("unknown command '" + cfg.command + "'");

        bool pass = true;
        nlohmann::json gates = nlohmann::json::array();
        for (const auto& g : res.gates) {
            pass = pass && g.pass;
            gates.push_back({{"name", g.name}, {"pass", g.pass}, {"detail", g.detail}});
            log << (g.pass ? "PASS " : "FAIL ") << g.name << (g.detail.empty() ? "" : " (" + g.detail + ")") << '\n';
        }
        nlohmann::json doc = {{"config", detail::config_json(cfg)}, {"gates", gates}, {"pass", pass}};
        for (auto& [key, value] : res.body.items()) doc[key] = value;
        const std::filesystem::path dir(cfg.out);
        if (res.report) {
            const nlohmann::json study = report_json(*res.report, cfg.reproducible);
            for (auto& [key, value] : study.items()) doc[key] = value;
            auto csv = detail::open_output(dir / "report.csv");
            write_report_csv(csv, *res.report, cfg.reproducible);
            detail::finish_output(csv, dir / "report.csv");
        }
        auto js = detail::open_output(dir / "report.json");
        js << doc.dump(2) << '\n';
        detail::finish_output(js, dir / "report.json");
        return pass ? kPass : kGateFailed;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const MeshError& e) {
        err << "mesh error: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    }
}

} // namespace ncpoly::cli
