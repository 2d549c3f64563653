#pragma once

#include "shapederiv/fields.hpp"
#include "shapederiv/flow.hpp"
#include "shapederiv/mesh.hpp"
#include "shapederiv/stokes_fem.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shapederiv::cli {

enum class Command { QpDemo, StokesSolve, ShapeDerivative, FdVerify, Corollary3, Convergence };

Command command_from_string(const std::string& name);
std::string to_string(Command command);

/// Validated run configuration. `resolved` is the input config with every
/// default filled in; it is embedded verbatim in the reports.
struct RunConfig {
    Command command = Command::StokesSolve;
    nlohmann::json resolved;
    /// Directory used to resolve relative paths inside the config.
    std::string base_dir = ".";
};

/// Parses and validates a JSON config for `command`. Unknown keys, missing
/// command-specific fields and malformed values raise ConfigError.
RunConfig parse_config(Command command, const nlohmann::json& config, const std::string& base_dir = ".");
RunConfig load_config(Command command, const std::string& path);

struct FdCsvRow {
    double s, fd, L1, abs_err;
};

/// Flat key-value report plus optional CSV tables.
struct Report {
    std::vector<std::pair<std::string, std::string>> values;
    std::vector<std::string> summary;
    std::vector<FdCsvRow> fd_table;
    std::vector<std::string> extra_csv_header;
    std::vector<std::vector<double>> extra_csv_rows;
    std::string extra_csv_name;

    void add(const std::string& key, double value);
    void add(const std::string& key, long long value);
    void add(const std::string& key, const std::string& value);
    [[nodiscard]] const std::string* find(const std::string& key) const;
};

/// 17 significant digits, as used in machine-readable output.
std::string format_exact(double value);
/// 6 significant digits, as used in summaries.
std::string format_short(double value);

/// Builders shared by the run pipeline and tests.
mesh::TriMesh build_mesh(const nlohmann::json& spec, const std::string& base_dir);
flow::VelocityField build_velocity(const nlohmann::json& spec);
fields::VectorField build_force(const nlohmann::json& spec);
fields::ExactSolution build_exact(const std::string& name);

Report run(const RunConfig& config);

/// Writes summary.txt, report.kv and, when present, fd_table.csv and the extra table.
void write_report(const std::string& dir, const Report& report);

std::string report_kv_text(const Report& report);
std::string fd_table_csv(const Report& report);
std::string summary_text(const Report& report);

}  // namespace shapederiv::cli
