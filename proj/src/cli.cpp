#include "shapederiv/cli.hpp"

#include "shapederiv/core_minimax.hpp"
#include "shapederiv/error.hpp"
#include "shapederiv/qp_io.hpp"
#include "shapederiv/shape_derivative.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace shapederiv::cli {

using nlohmann::json;

namespace {

Error config_error(const std::string& what) { return Error(ErrorKind::ConfigError, what); }

void check_keys(const json& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.is_object()) throw config_error(where + " must be an object");
    for (const auto& [key, value] : node.items()) {
        if (!allowed.contains(key)) throw config_error("unknown field '" + key + "' in " + where);
    }
}

double get_number(const json& node, const std::string& key, const std::string& where) {
    if (!node.contains(key) || !node.at(key).is_number()) throw config_error(where + "." + key + " must be a number");
    return node.at(key).get<double>();
}

int get_int(const json& node, const std::string& key, const std::string& where) {
    if (!node.contains(key) || !node.at(key).is_number_integer()) {
        throw config_error(where + "." + key + " must be an integer");
    }
    return node.at(key).get<int>();
}

Eigen::Vector2d get_vec2(const json& node, const std::string& key, const std::string& where) {
    if (!node.contains(key)) throw config_error(where + "." + key + " is required");
    const json& v = node.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw config_error(where + "." + key + " must be a 2-vector");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

Eigen::Matrix2d get_mat2(const json& node, const std::string& key, const std::string& where) {
    if (!node.contains(key)) throw config_error(where + "." + key + " is required");
    const json& m = node.at(key);
    if (!m.is_array() || m.size() != 2) throw config_error(where + "." + key + " must be a 2x2 row-major array");
    Eigen::Matrix2d out;
    for (std::size_t i = 0; i < 2; ++i) {
        if (!m[i].is_array() || m[i].size() != 2) throw config_error(where + "." + key + " must be a 2x2 row-major array");
        for (std::size_t j = 0; j < 2; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j].get<double>();
    }
    return out;
}

std::vector<double> get_s_list(const json& node) {
    if (!node.is_array() || node.empty()) throw config_error("s_list must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : node) {
        if (!v.is_number()) throw config_error("s_list entries must be numbers");
        out.push_back(v.get<double>());
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0.0)) throw config_error("s_list entries must be strictly positive");
        if (i > 0 && !(out[i] < out[i - 1])) throw config_error("s_list must be strictly decreasing");
    }
    return out;
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

const std::vector<double> kDefaultSList{1e-2, 3e-3, 1e-3};

json default_tolerances() {
    return {{"slope_min", 1.8}, {"qp_tolerance", 1e-10}, {"max_iterations", 500}};
}

void validate_mesh_spec(json& spec) {
    check_keys(spec, "mesh", {"kind", "n", "neumann", "rings", "path"});
    const std::string kind = spec.value("kind", "");
    if (kind == "unit-square") {
        check_keys(spec, "mesh (unit-square)", {"kind", "n", "neumann"});
        if (get_int(spec, "n", "mesh") < 1) throw config_error("mesh.n must be >= 1");
        if (!spec.contains("neumann")) spec["neumann"] = json::array();
        mesh::NeumannSides::parse(spec.at("neumann").get<std::vector<std::string>>());
    } else if (kind == "disk") {
        check_keys(spec, "mesh (disk)", {"kind", "rings"});
        if (get_int(spec, "rings", "mesh") < 1) throw config_error("mesh.rings must be >= 1");
    } else if (kind == "file") {
        check_keys(spec, "mesh (file)", {"kind", "path"});
        if (!spec.contains("path") || !spec.at("path").is_string()) throw config_error("mesh.path must be a string");
    } else {
        throw config_error("mesh.kind must be one of unit-square, disk, file");
    }
}

void validate_velocity_spec(const json& spec) {
    check_keys(spec, "velocity", {"kind", "b", "M", "omega", "coefficients", "window"});
    build_velocity(spec);
}

void validate_force_spec(const json& spec) {
    check_keys(spec, "force", {"name", "value", "gradient", "c"});
    build_force(spec);
}

bool has_neumann(const mesh::TriMesh& m) { return m.count_edges(mesh::BoundaryTag::Neumann) > 0; }

stokes::PressureMode pressure_mode(const RunConfig& config) {
    return config.resolved.at("pressure_mode").get<std::string>() == "pinned" ? stokes::PressureMode::Pinned
                                                                            : stokes::PressureMode::Mixed;
}

std::optional<fields::TractionField> build_traction(const json& config) {
    if (!config.contains("traction")) return std::nullopt;
    const json& spec = config.at("traction");
    return build_exact(spec.at("name").get<std::string>()).traction();
}

void add_vector(Report& report, const std::string& key, const Eigen::VectorXd& v) {
    std::string text;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) text += ' ';
        text += format_exact(v(i));
    }
    report.add(key, text);
}

void add_derivative_summary(Report& report, const shape::DerivativeReport& d, double slope_min) {
    report.add("energy", d.energy);
    report.add("L1", d.L1);
    report.add("E1", d.E1);
    report.add("dual_term", d.dual_term);
    if (d.fd_table.empty()) {
        report.summary.push_back(fmt::format("shape derivative L1 = {} (E1 = {}, dual term = {})", format_short(d.L1),
                                             format_short(d.E1), format_short(d.dual_term)));
        return;
    }
    for (std::size_t i = 0; i < d.fd_table.size(); ++i) {
        const auto& row = d.fd_table[i];
        report.fd_table.push_back({row.s, row.fd, d.L1, row.abs_err});
        report.add(fmt::format("fd.{}.s", i), row.s);
        report.add(fmt::format("fd.{}.central", i), row.fd);
        report.add(fmt::format("fd.{}.abs_err", i), row.abs_err);
        report.add(fmt::format("fd.{}.forward", i), row.forward);
        report.add(fmt::format("fd.{}.forward_err", i), row.forward_err);
    }
    report.add("slope", d.slope.describe());
    report.add("forward_slope", d.forward_slope.describe());
    const bool ok = d.slope.exact || d.slope.slope >= slope_min;
    report.add("slope_ok", std::string(ok ? "true" : "false"));
    report.summary.push_back(fmt::format("L1 = {}  E = {}", format_short(d.L1), format_short(d.energy)));
    for (const auto& row : d.fd_table) {
        report.summary.push_back(fmt::format("  s = {:<10} fd = {:<14} |fd - L1| = {}", format_short(row.s),
                                             format_short(row.fd), format_short(row.abs_err)));
    }
    report.summary.push_back(fmt::format("error slope: {} (required >= {}){}",
                                         d.slope.exact ? d.slope.describe() : format_short(d.slope.slope),
                                         format_short(slope_min), ok ? "" : "  FAILED"));
}

Report run_qp_demo(const RunConfig& config) {
    const json& cfg = config.resolved;
    const auto instance = minimax::load_qp_instance(resolve_path(cfg.at("qp").at("instance"), config.base_dir));
    if (!instance.direction) throw config_error("qp-demo instance needs a 'direction' block");
    minimax::SolverOptions options;
    options.tolerance = cfg.at("tolerances").at("qp_tolerance").get<double>();
    options.max_iterations = cfg.at("tolerances").at("max_iterations").get<int>();
    const auto& qp = instance.qp;
    const auto sp = minimax::solve_saddle_point(qp, options);
    const auto study = minimax::fd_study(qp, *instance.direction, get_s_list(cfg.at("s_list")), options);

    Report report;
    report.add("n", static_cast<long long>(qp.primal_dim()));
    report.add("m", static_cast<long long>(qp.dual_dim()));
    report.add("cone", std::string(minimax::to_string(qp.cone)));
    add_vector(report, "u", sp.u);
    add_vector(report, "lambda", sp.lambda);
    std::string active;
    for (int i : sp.active_set) active += (active.empty() ? "" : " ") + std::to_string(i);
    report.add("active_set", active);
    report.add("kkt_residual", sp.kkt_residual);
    report.add("objective", minimax::objective_value(qp, sp.u));
    report.add("lagrangian", minimax::lagrangian_value(qp, sp.u, sp.lambda));
    report.add("lbb", minimax::check_lbb(qp));
    report.add("L1", study.L1);

    std::vector<double> steps;
    std::vector<double> errors;
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const auto& row = study.rows[i];
        report.fd_table.push_back({row.s, row.fd, study.L1, row.abs_err});
        report.add(fmt::format("fd.{}.s", i), row.s);
        report.add(fmt::format("fd.{}.central", i), row.fd);
        report.add(fmt::format("fd.{}.abs_err", i), row.abs_err);
        steps.push_back(row.s);
        errors.push_back(row.abs_err);
    }
    const double slope_min = cfg.at("tolerances").at("slope_min").get<double>();
    const SlopeFit fit = loglog_slope(steps, errors, 1e-14 * (1.0 + std::abs(study.L1)));
    const bool ok = fit.exact || fit.slope >= slope_min;
    report.add("slope", fit.describe());
    report.add("slope_ok", std::string(ok ? "true" : "false"));

    report.summary.push_back(fmt::format("{} cone QP, n = {}, m = {}", minimax::to_string(qp.cone), qp.primal_dim(),
                                         qp.dual_dim()));
    report.summary.push_back(fmt::format("objective = {}  KKT residual = {}  LBB = {}",
                                         format_short(minimax::objective_value(qp, sp.u)),
                                         format_short(sp.kkt_residual), format_short(minimax::check_lbb(qp))));
    report.summary.push_back(fmt::format("L1 = {}", format_short(study.L1)));
    for (const auto& row : study.rows) {
        report.summary.push_back(fmt::format("  s = {:<10} fd = {:<14} |fd - L1| = {}", format_short(row.s),
                                             format_short(row.fd), format_short(row.abs_err)));
    }
    report.summary.push_back(fmt::format("error slope: {} (required >= {}){}",
                                         fit.exact ? fit.describe() : format_short(fit.slope),
                                         format_short(slope_min), ok ? "" : "  FAILED"));
    return report;
}

Report run_stokes_solve(const RunConfig& config) {
    const json& cfg = config.resolved;
    const mesh::TriMesh m = build_mesh(cfg.at("mesh"), config.base_dir);
    const auto sys = stokes::assemble(m, build_force(cfg.at("force")), build_traction(cfg));
    const auto sol = stokes::solve_stokes(sys, pressure_mode(config));

    Report report;
    report.add("velocity_dofs", static_cast<long long>(sys.space.num_velocity_dofs()));
    report.add("pressure_dofs", static_cast<long long>(sys.space.num_pressure_dofs()));
    report.add("energy", stokes::energy(sys, sol));
    report.add("momentum_residual", sol.momentum_residual);
    report.add("divergence_residual", sol.divergence_residual);
    const double u_max = sol.u.size() > 0 ? sol.u.lpNorm<Eigen::Infinity>() : 0.0;
    report.add("u_max", u_max);
    report.add("lambda_min", sol.lambda.minCoeff());
    report.add("lambda_max", sol.lambda.maxCoeff());
    report.summary.push_back(fmt::format("Taylor-Hood Stokes solve: {} velocity dofs, {} pressure dofs",
                                         sys.space.num_velocity_dofs(), sys.space.num_pressure_dofs()));
    report.summary.push_back(fmt::format("energy = {}  |u|_max = {}  residuals = {}, {}",
                                         format_short(stokes::energy(sys, sol)), format_short(u_max),
                                         format_short(sol.momentum_residual), format_short(sol.divergence_residual)));
    if (cfg.contains("exact")) {
        const auto exact = build_exact(cfg.at("exact").get<std::string>());
        const auto err = stokes::nodal_errors(sys, sol, exact);
        report.add("velocity_nodal_error", err.velocity_max);
        report.add("pressure_nodal_error", err.pressure_max);
        report.add("velocity_h1_error", stokes::velocity_h1_error(sys, sol, exact));
        report.summary.push_back(fmt::format("against '{}': nodal velocity error {}, nodal pressure error {}",
                                             exact.name, format_short(err.velocity_max),
                                             format_short(err.pressure_max)));
    }
    return report;
}

shape::StokesProblem build_problem(const RunConfig& config) {
    const json& cfg = config.resolved;
    shape::StokesProblem problem{build_mesh(cfg.at("mesh"), config.base_dir), build_force(cfg.at("force")),
                                 pressure_mode(config), false, cfg.at("steps").get<int>()};
    return problem;
}

Report run_shape_derivative(const RunConfig& config) {
    const json& cfg = config.resolved;
    const auto problem = build_problem(config);
    const auto field = build_velocity(cfg.at("velocity"));
    const auto sys = stokes::assemble(problem.mesh, problem.force);
    const auto sol = stokes::solve_stokes(sys, problem.pressure_mode);
    const auto forms = shape::assemble_perturbation(sys.space, field, problem.force);
    const auto d = shape::stokes_shape_derivative(sys, sol, forms, field);
    Report report;
    add_derivative_summary(report, d, cfg.at("tolerances").at("slope_min").get<double>());
    return report;
}

Report run_fd_verify(const RunConfig& config) {
    const json& cfg = config.resolved;
    const auto problem = build_problem(config);
    const auto field = build_velocity(cfg.at("velocity"));
    const auto d = shape::fd_verify(problem, field, get_s_list(cfg.at("s_list")));
    Report report;
    add_derivative_summary(report, d, cfg.at("tolerances").at("slope_min").get<double>());
    return report;
}

Report run_corollary3(const RunConfig& config) {
    const json& cfg = config.resolved;
    const auto field = build_velocity(cfg.at("velocity"));
    const int rings = cfg.at("mesh").at("rings").get<int>();
    auto problem = shape::StokesProblem{mesh::disk_mesh(rings), build_force(cfg.at("force")),
                                        stokes::PressureMode::Pinned, true, cfg.at("steps").get<int>()};
    const auto d = shape::fd_verify(problem, field, get_s_list(cfg.at("s_list")));
    Report report;
    add_derivative_summary(report, d, cfg.at("tolerances").at("slope_min").get<double>());
    return report;
}

Report run_convergence(const RunConfig& config) {
    const json& cfg = config.resolved;
    const auto exact = build_exact(cfg.at("exact").get<std::string>());
    const auto neumann = mesh::NeumannSides::parse(cfg.at("neumann").get<std::vector<std::string>>());
    const auto rows = stokes::convergence_study(exact, cfg.at("n_list").get<std::vector<int>>(), neumann);
    Report report;
    report.extra_csv_name = "convergence.csv";
    report.extra_csv_header = {"n", "h1_error", "order"};
    report.summary.push_back(fmt::format("H1 velocity error for '{}'", exact.name));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        report.add(fmt::format("row.{}.n", i), static_cast<long long>(row.n));
        report.add(fmt::format("row.{}.h1_error", i), row.h1_error);
        if (row.order) report.add(fmt::format("row.{}.order", i), *row.order);
        report.extra_csv_rows.push_back(
            {static_cast<double>(row.n), row.h1_error, row.order ? *row.order : std::nan("")});
        report.summary.push_back(fmt::format("  n = {:<4} error = {:<14} order = {}", row.n,
                                             format_short(row.h1_error),
                                             row.order ? format_short(*row.order) : std::string("-")));
    }
    return report;
}

}  // namespace

Command command_from_string(const std::string& name) {
    if (name == "qp-demo") return Command::QpDemo;
    if (name == "stokes-solve") return Command::StokesSolve;
    if (name == "shape-derivative") return Command::ShapeDerivative;
    if (name == "fd-verify") return Command::FdVerify;
    if (name == "corollary3") return Command::Corollary3;
    if (name == "convergence") return Command::Convergence;
    throw config_error("unknown command '" + name + "'");
}

std::string to_string(Command command) {
    switch (command) {
        case Command::QpDemo: return "qp-demo";
        case Command::StokesSolve: return "stokes-solve";
        case Command::ShapeDerivative: return "shape-derivative";
        case Command::FdVerify: return "fd-verify";
        case Command::Corollary3: return "corollary3";
        case Command::Convergence: return "convergence";
    }
    return "unknown";
}

mesh::TriMesh build_mesh(const json& spec, const std::string& base_dir) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "unit-square") {
        return mesh::unit_square_mesh(spec.at("n").get<int>(),
                                      mesh::NeumannSides::parse(spec.value("neumann", std::vector<std::string>{})));
    }
    if (kind == "disk") return mesh::disk_mesh(spec.at("rings").get<int>());
    if (kind == "file") return mesh::load_mesh(resolve_path(spec.at("path").get<std::string>(), base_dir));
    throw config_error("unknown mesh kind '" + kind + "'");
}

flow::VelocityField build_velocity(const json& spec) {
    if (!spec.is_object() || !spec.contains("kind")) throw config_error("velocity.kind is required");
    const std::string kind = spec.at("kind").get<std::string>();
    std::optional<flow::SupportWindow> window;
    if (spec.contains("window")) {
        const json& w = spec.at("window");
        check_keys(w, "velocity.window", {"lo", "hi", "ramp"});
        window = flow::SupportWindow{get_vec2(w, "lo", "velocity.window"), get_vec2(w, "hi", "velocity.window"),
                                     get_number(w, "ramp", "velocity.window")};
    }
    const auto only = [&](const std::set<std::string>& keys) {
        std::set<std::string> allowed = keys;
        allowed.insert({"kind", "window"});
        check_keys(spec, "velocity (" + kind + ")", allowed);
    };
    if (kind == "zero") {
        only({});
        return flow::VelocityField(flow::ZeroVelocity{}, window);
    }
    if (kind == "constant") {
        only({"b"});
        return flow::VelocityField(flow::ConstantVelocity{get_vec2(spec, "b", "velocity")}, window);
    }
    if (kind == "affine") {
        only({"M", "b"});
        const Eigen::Vector2d b = spec.contains("b") ? get_vec2(spec, "b", "velocity") : Eigen::Vector2d::Zero();
        return flow::VelocityField(flow::AffineVelocity{get_mat2(spec, "M", "velocity"), b}, window);
    }
    if (kind == "rotation") {
        only({"omega"});
        return flow::VelocityField(flow::RotationVelocity{get_number(spec, "omega", "velocity")}, window);
    }
    if (kind == "quadratic") {
        only({"coefficients"});
        const json& c = spec.contains("coefficients") ? spec.at("coefficients") : json();
        if (!c.is_array() || c.size() != 2 || !c[0].is_array() || c[0].size() != 6 || !c[1].is_array() ||
            c[1].size() != 6) {
            throw config_error("velocity.coefficients must be two rows of 6 numbers (1, x, y, x², xy, y²)");
        }
        Eigen::Matrix<double, 2, 6> coeffs;
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 6; ++j) coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c[i][j].get<double>();
        }
        return flow::VelocityField(flow::QuadraticVelocity{coeffs}, window);
    }
    throw config_error("unknown velocity kind '" + kind + "'");
}

fields::VectorField build_force(const json& spec) {
    if (!spec.is_object() || !spec.contains("name")) throw config_error("force.name is required");
    const std::string name = spec.at("name").get<std::string>();
    const auto only = [&](const std::set<std::string>& keys) {
        std::set<std::string> allowed = keys;
        allowed.insert("name");
        check_keys(spec, "force (" + name + ")", allowed);
    };
    if (name == "zero") {
        only({});
        return fields::zero_force();
    }
    if (name == "constant") {
        only({"value"});
        return fields::constant_force(get_vec2(spec, "value", "force"));
    }
    if (name == "gradient-of-linear") {
        // f = ∇(a·x) = a; paired with u = 0 and a linear pressure.
        only({"gradient"});
        auto f = fields::constant_force(spec.contains("gradient") ? get_vec2(spec, "gradient", "force")
                                                                  : Eigen::Vector2d(1.0, 0.0));
        f.name = name;
        return f;
    }
    if (name == "rotational") {
        only({"c"});
        return fields::rotational_force(spec.contains("c") ? get_number(spec, "c", "force") : 1.0);
    }
    if (name == "trigonometric" || name == "poiseuille" || name == "pressure-gradient") {
        only({});
        return build_exact(name).force;
    }
    throw config_error("unknown force field '" + name + "'");
}

fields::ExactSolution build_exact(const std::string& name) {
    if (name == "pressure-gradient") return fields::pressure_gradient_solution();
    if (name == "poiseuille") return fields::poiseuille_solution();
    if (name == "trigonometric") return fields::trigonometric_solution();
    throw config_error("unknown exact solution '" + name + "'");
}

RunConfig parse_config(Command command, const json& input, const std::string& base_dir) {
    if (!input.is_object()) throw config_error("config must be a JSON object");
    json cfg = input;
    if (cfg.contains("command")) {
        if (!cfg.at("command").is_string() || cfg.at("command").get<std::string>() != to_string(command)) {
            throw config_error("config command does not match the requested command '" + to_string(command) + "'");
        }
    }
    cfg["command"] = to_string(command);

    json tolerances = default_tolerances();
    if (cfg.contains("tolerances")) {
        check_keys(cfg.at("tolerances"), "tolerances", {"slope_min", "qp_tolerance", "max_iterations"});
        for (const auto& [key, value] : cfg.at("tolerances").items()) {
            if (!value.is_number()) throw config_error("tolerances." + key + " must be a number");
            tolerances[key] = value;
        }
    }
    cfg["tolerances"] = tolerances;

    std::set<std::string> allowed{"command", "tolerances"};
    const auto require = [&](const std::string& key) {
        if (!cfg.contains(key)) throw config_error(to_string(command) + " requires '" + key + "'");
    };
    const auto resolve_pressure_mode = [&]() {
        allowed.insert("pressure_mode");
        const std::string mode = cfg.value("pressure_mode", "auto");
        if (mode == "auto") {
            const auto m = build_mesh(cfg.at("mesh"), base_dir);
            cfg["pressure_mode"] = has_neumann(m) ? "mixed" : "pinned";
        } else if (mode != "mixed" && mode != "pinned") {
            throw config_error("pressure_mode must be auto, mixed or pinned");
        }
    };
    const auto resolve_fd = [&]() {
        allowed.insert({"s_list", "steps"});
        if (!cfg.contains("s_list")) cfg["s_list"] = kDefaultSList;
        get_s_list(cfg.at("s_list"));
        if (!cfg.contains("steps")) cfg["steps"] = flow::kDefaultSteps;
        if (get_int(cfg, "steps", "config") < 1) throw config_error("steps must be >= 1");
    };

    switch (command) {
        case Command::QpDemo: {
            allowed.insert({"qp", "s_list"});
            require("qp");
            check_keys(cfg.at("qp"), "qp", {"instance"});
            if (!cfg.at("qp").contains("instance") || !cfg.at("qp").at("instance").is_string()) {
                throw config_error("qp.instance must be a path");
            }
            if (!cfg.contains("s_list")) cfg["s_list"] = kDefaultSList;
            get_s_list(cfg.at("s_list"));
            break;
        }
        case Command::StokesSolve: {
            allowed.insert({"mesh", "force", "traction", "exact"});
            require("mesh");
            require("force");
            validate_mesh_spec(cfg["mesh"]);
            validate_force_spec(cfg.at("force"));
            if (cfg.contains("traction")) {
                check_keys(cfg.at("traction"), "traction", {"name"});
                build_exact(cfg.at("traction").value("name", ""));
            }
            if (cfg.contains("exact")) build_exact(cfg.at("exact").get<std::string>());
            resolve_pressure_mode();
            break;
        }
        case Command::ShapeDerivative:
        case Command::FdVerify: {
            allowed.insert({"mesh", "force", "velocity"});
            require("mesh");
            require("force");
            require("velocity");
            validate_mesh_spec(cfg["mesh"]);
            validate_force_spec(cfg.at("force"));
            validate_velocity_spec(cfg.at("velocity"));
            resolve_pressure_mode();
            resolve_fd();
            if (command == Command::ShapeDerivative) cfg.erase("s_list");
            break;
        }
        case Command::Corollary3: {
            allowed.insert({"mesh", "force", "velocity"});
            require("force");
            if (!cfg.contains("mesh")) cfg["mesh"] = {{"kind", "disk"}, {"rings", 4}};
            validate_mesh_spec(cfg["mesh"]);
            if (cfg.at("mesh").at("kind") != "disk") throw config_error("corollary3 runs on a disk mesh");
            if (!cfg.contains("velocity")) cfg["velocity"] = {{"kind", "rotation"}, {"omega", 1.0}};
            validate_velocity_spec(cfg.at("velocity"));
            if (cfg.at("velocity").at("kind") != "rotation" || cfg.at("velocity").contains("window")) {
                throw config_error("corollary3 needs an unwindowed rotation velocity");
            }
            validate_force_spec(cfg.at("force"));
            cfg["pressure_mode"] = "pinned";
            allowed.insert("pressure_mode");
            resolve_fd();
            break;
        }
        case Command::Convergence: {
            allowed.insert({"exact", "n_list", "neumann"});
            require("exact");
            build_exact(cfg.at("exact").get<std::string>());
            if (!cfg.contains("n_list")) cfg["n_list"] = {4, 8, 16};
            const json& n_list = cfg.at("n_list");
            if (!n_list.is_array() || n_list.empty()) throw config_error("n_list must be a non-empty array");
            for (const auto& n : n_list) {
                if (!n.is_number_integer() || n.get<int>() < 1) throw config_error("n_list entries must be integers >= 1");
            }
            if (!cfg.contains("neumann")) cfg["neumann"] = {"right"};
            mesh::NeumannSides::parse(cfg.at("neumann").get<std::vector<std::string>>());
            break;
        }
    }
    check_keys(cfg, "config", allowed);
    return {command, cfg, base_dir};
}

RunConfig load_config(Command command, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, "config file " + path + ": " + e.what());
    }
    const auto parent = std::filesystem::path(path).parent_path();
    return parse_config(command, doc, parent.empty() ? std::string(".") : parent.string());
}

void Report::add(const std::string& key, double value) { values.emplace_back(key, format_exact(value)); }
void Report::add(const std::string& key, long long value) { values.emplace_back(key, std::to_string(value)); }
void Report::add(const std::string& key, const std::string& value) { values.emplace_back(key, value); }

const std::string* Report::find(const std::string& key) const {
    for (const auto& [k, v] : values) {
        if (k == key) return &v;
    }
    return nullptr;
}

std::string format_exact(double value) { return fmt::format("{:.17g}", value); }
std::string format_short(double value) { return fmt::format("{:.6g}", value); }

Report run(const RunConfig& config) {
    Report report;
    try {
        switch (config.command) {
            case Command::QpDemo: report = run_qp_demo(config); break;
            case Command::StokesSolve: report = run_stokes_solve(config); break;
            case Command::ShapeDerivative: report = run_shape_derivative(config); break;
            case Command::FdVerify: report = run_fd_verify(config); break;
            case Command::Corollary3: report = run_corollary3(config); break;
            case Command::Convergence: report = run_convergence(config); break;
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed config value: ") + e.what());
    }
    report.values.insert(report.values.begin(), {"config", config.resolved.dump()});
    report.values.insert(report.values.begin(), {"command", to_string(config.command)});
    report.summary.insert(report.summary.begin(), "shapederiv " + to_string(config.command));
    report.summary.push_back("config: " + config.resolved.dump());
    return report;
}

std::string report_kv_text(const Report& report) {
    std::string out;
    for (const auto& [key, value] : report.values) out += key + " = " + value + "\n";
    return out;
}

std::string fd_table_csv(const Report& report) {
    std::string out = "s,fd,L1,abs_err\n";
    for (const auto& row : report.fd_table) {
        out += fmt::format("{},{},{},{}\n", format_exact(row.s), format_exact(row.fd), format_exact(row.L1),
                           format_exact(row.abs_err));
    }
    return out;
}

std::string summary_text(const Report& report) {
    std::string out;
    for (const auto& line : report.summary) out += line + "\n";
    return out;
}

void write_report(const std::string& dir, const Report& report) {
    std::filesystem::create_directories(dir);
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        if (!out) throw config_error("cannot write " + (std::filesystem::path(dir) / name).string());
        out << text;
    };
    write("summary.txt", summary_text(report));
    write("report.kv", report_kv_text(report));
    if (!report.fd_table.empty()) write("fd_table.csv", fd_table_csv(report));
    if (!report.extra_csv_name.empty()) {
        std::string csv;
        for (std::size_t i = 0; i < report.extra_csv_header.size(); ++i) {
            csv += (i ? "," : "") + report.extra_csv_header[i];
        }
        csv += "\n";
        for (const auto& row : report.extra_csv_rows) {
            for (std::size_t i = 0; i < row.size(); ++i) csv += (i ? "," : "") + format_exact(row[i]);
            csv += "\n";
        }
        write(report.extra_csv_name, csv);
    }
}

}  // namespace shapederiv::cli
