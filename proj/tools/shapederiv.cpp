#include "shapederiv/cli.hpp"
#include "shapederiv/error.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Shape derivatives of cone-constrained quadratic problems and the Stokes energy"};
    std::string command;
    std::string config_path;
    std::string output_dir = "out";
    bool verbose = false;
    app.add_option("command", command,
                   "qp-demo | stokes-solve | shape-derivative | fd-verify | corollary3 | convergence")
        ->required();
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--output", output_dir, "directory for summary.txt, report.kv and CSV tables");
    app.add_flag("--verbose", verbose, "print the summary to stdout");
    CLI11_PARSE(app, argc, argv);

    using shapederiv::Error;
    using shapederiv::ErrorKind;
    try {
        const auto config = shapederiv::cli::load_config(shapederiv::cli::command_from_string(command), config_path);
        const auto report = shapederiv::cli::run(config);
        shapederiv::cli::write_report(output_dir, report);
        if (verbose) std::cout << shapederiv::cli::summary_text(report);
        std::cout << "wrote " << output_dir << "/report.kv\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        const bool config_problem = e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::ParseError;
        return config_problem ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << '\n';
        return 1;
    }
}
