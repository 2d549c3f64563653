#include "shapederiv/cli.hpp"
#include "shapederiv/error.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace shapederiv;
using namespace shapederiv::cli;
using nlohmann::json;

namespace {

const std::string kDataDir = SHAPEDERIV_DATA_DIR;
const std::string kCliPath = SHAPEDERIV_CLI_PATH;

ErrorKind config_kind(Command command, const json& cfg) {
    try {
        parse_config(command, cfg, kDataDir);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a configuration error for " << cfg.dump());
    return ErrorKind::SingularSystem;
}

double number(const Report& report, const std::string& key) {
    const std::string* value = report.find(key);
    REQUIRE(value != nullptr);
    return std::stod(*value);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json square_fd(const json& velocity) {
    return {{"mesh", {{"kind", "unit-square"}, {"n", 4}, {"neumann", {"right"}}}},
            {"force", {{"name", "trigonometric"}}},
            {"velocity", velocity}};
}

int run_cli(const std::string& args) {
    const int status = std::system((kCliPath + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("command names") {
    for (auto c : {Command::QpDemo, Command::StokesSolve, Command::ShapeDerivative, Command::FdVerify,
                   Command::Corollary3, Command::Convergence}) {
        CHECK(command_from_string(to_string(c)) == c);
    }
    CHECK_THROWS_AS(command_from_string("optimize"), Error);
}

TEST_CASE("configuration validation") {
    const json good = square_fd({{"kind", "zero"}});
    CHECK_NOTHROW(parse_config(Command::FdVerify, good));

    json unknown = good;
    unknown["colour"] = "blue";
    CHECK(config_kind(Command::FdVerify, unknown) == ErrorKind::ConfigError);

    json mismatch = good;
    mismatch["command"] = "convergence";
    CHECK(config_kind(Command::FdVerify, mismatch) == ErrorKind::ConfigError);

    json increasing = good;
    increasing["s_list"] = {1e-3, 1e-2};
    CHECK(config_kind(Command::FdVerify, increasing) == ErrorKind::ConfigError);

    json negative = good;
    negative["s_list"] = {1e-2, -1e-3};
    CHECK(config_kind(Command::FdVerify, negative) == ErrorKind::ConfigError);

    json no_force = good;
    no_force.erase("force");
    CHECK(config_kind(Command::FdVerify, no_force) == ErrorKind::ConfigError);

    json traction = good;
    traction["traction"] = {{"name", "poiseuille"}};
    CHECK(config_kind(Command::FdVerify, traction) == ErrorKind::ConfigError);

    json bad_force = good;
    bad_force["force"] = {{"name", "gravity"}};
    CHECK(config_kind(Command::FdVerify, bad_force) == ErrorKind::ConfigError);

    CHECK(config_kind(Command::FdVerify, square_fd({{"kind", "rotation"}, {"omega", 1.0}, {"b", {1, 2}}})) ==
          ErrorKind::ConfigError);
    CHECK(config_kind(Command::FdVerify, square_fd({{"kind", "affine"}, {"M", {1, 2, 3}}})) == ErrorKind::ConfigError);

    json steps = good;
    steps["steps"] = 0;
    CHECK(config_kind(Command::FdVerify, steps) == ErrorKind::ConfigError);

    CHECK(config_kind(Command::Corollary3, {{"force", {{"name", "zero"}}}, {"velocity", {{"kind", "constant"}, {"b", {1, 0}}}}}) ==
          ErrorKind::ConfigError);
    CHECK(config_kind(Command::QpDemo, json::object()) == ErrorKind::ConfigError);
    CHECK(config_kind(Command::Convergence, {{"exact", "vortex"}}) == ErrorKind::ConfigError);
}

TEST_CASE("defaults are filled into the resolved configuration") {
    const auto config = parse_config(Command::FdVerify, square_fd({{"kind", "zero"}}));
    CHECK(config.resolved.at("s_list") == json({1e-2, 3e-3, 1e-3}));
    CHECK(config.resolved.at("steps") == 64);
    CHECK(config.resolved.at("pressure_mode") == "mixed");
    CHECK(config.resolved.at("tolerances").at("slope_min") == 1.8);

    const auto disk = parse_config(Command::Corollary3, {{"force", {{"name", "rotational"}}}});
    CHECK(disk.resolved.at("mesh").at("kind") == "disk");
    CHECK(disk.resolved.at("velocity").at("kind") == "rotation");
    CHECK(disk.resolved.at("pressure_mode") == "pinned");

    const auto pure_dirichlet = parse_config(
        Command::StokesSolve,
        {{"mesh", {{"kind", "unit-square"}, {"n", 2}}}, {"force", {{"name", "constant"}, {"value", {1, 0}}}}});
    CHECK(pure_dirichlet.resolved.at("pressure_mode") == "pinned");
}

TEST_CASE("stokes-solve reproduces the pressure-gradient case") {
    const auto config = parse_config(Command::StokesSolve,
                                     {{"mesh", {{"kind", "unit-square"}, {"n", 4}, {"neumann", {"right"}}}},
                                      {"force", {{"name", "constant"}, {"value", {1, 0}}}},
                                      {"exact", "pressure-gradient"}});
    const auto report = run(config);
    CHECK(number(report, "u_max") <= 1e-9);
    CHECK(number(report, "pressure_nodal_error") <= 1e-9);
    REQUIRE(report.find("config") != nullptr);
    CHECK(*report.find("config") == config.resolved.dump());
    CHECK(*report.find("command") == "stokes-solve");
}

TEST_CASE("fd-verify with the zero field reports an exact slope") {
    const auto report = run(parse_config(Command::FdVerify, square_fd({{"kind", "zero"}})));
    CHECK(*report.find("slope") == "exact (all errors 0)");
    CHECK(report.fd_table.size() == 3);
    const std::string csv = fd_table_csv(report);
    CHECK(csv.rfind("s,fd,L1,abs_err\n", 0) == 0);
}

TEST_CASE("qp-demo on the bundled equality instance") {
    const auto config = load_config(Command::QpDemo, kDataDir + "/configs/qp_demo.json");
    const auto report = run(config);
    CHECK(report.find("L1") != nullptr);
    CHECK(report.fd_table.size() == 3);
    CHECK(number(report, "slope") >= 1.8);
    CHECK(*report.find("slope_ok") == "true");
    CHECK(number(report, "m") == 2);
    CHECK(number(report, "n") == 6);
}

TEST_CASE("reports are deterministic") {
    const auto config = load_config(Command::FdVerify, kDataDir + "/configs/fd_verify_zero.json");
    const auto first = run(config);
    const auto second = run(config);
    CHECK(report_kv_text(first) == report_kv_text(second));
    CHECK(fd_table_csv(first) == fd_table_csv(second));

    const auto dir = std::filesystem::temp_directory_path() / "shapederiv_test_cli";
    std::filesystem::remove_all(dir);
    write_report((dir / "a").string(), first);
    write_report((dir / "b").string(), second);
    for (const char* name : {"report.kv", "fd_table.csv", "summary.txt"}) {
        CHECK(std::filesystem::exists(dir / "a" / name));
        CHECK(read_file(dir / "a" / name) == read_file(dir / "b" / name));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting") {
    CHECK(format_exact(0.1) == "0.10000000000000001");
    CHECK(format_short(0.1) == "0.1");
    CHECK(format_short(1.0 / 3.0) == "0.333333");
}

TEST_CASE("command-line exit codes") {
    const auto dir = std::filesystem::temp_directory_path() / "shapederiv_test_exit";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string out = " --output " + (dir / "out").string();

    CHECK(run_cli("fd-verify --config " + kDataDir + "/configs/fd_verify_zero.json" + out) == 0);
    CHECK(std::filesystem::exists(dir / "out" / "report.kv"));

    std::ofstream(dir / "bad.json") << R"({"mesh": {"kind": "unit-square", "n": 2}, "force": {"name": "zero"}, "oops": 1})";
    CHECK(run_cli("stokes-solve --config " + (dir / "bad.json").string() + out) == 2);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(run_cli("stokes-solve --config " + (dir / "broken.json").string() + out) == 2);

    std::ofstream(dir / "neumann.json")
        << R"({"mesh": {"kind": "unit-square", "n": 2, "neumann": ["left", "right", "top", "bottom"]},
              "force": {"name": "zero"}, "pressure_mode": "mixed"})";
    CHECK(run_cli("stokes-solve --config " + (dir / "neumann.json").string() + out) == 3);

    CHECK(run_cli("launch --config " + (dir / "bad.json").string() + out) == 2);
    std::filesystem::remove_all(dir);
}
