// cnls: numerical laboratory for ground states of weakly coupled cubic
// Schrodinger systems.  Usage: cnls <command> --config <path> [--out <dir>]
// [--threads <k>].  Exit codes: 0 success, 2 configuration error, 3 solver
// failure.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <cnls/runner.hpp>

int main(int argc, char** argv) {
    CLI::App app{"cnls - coupled cubic Schrodinger ground-state laboratory"};
    std::string command, config_path, out_dir = "out";
    int threads = 1;
    app.add_option("command", command,
                   "one of: ground-state, sigma-map, threshold-sweep, semiclassical, "
                   "validate")
        ->required();
    app.add_option("--config", config_path, "path to the JSON run configuration")
        ->required();
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--threads", threads, "worker count for independent parameter points")
        ->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage problems are configuration errors
    }

    try {
        std::ifstream is(config_path, std::ios::binary);
        if (!is) {
            std::cerr << "cnls: cannot read config file " << config_path << "\n";
            return 2;
        }
        std::ostringstream buf;
        buf << is.rdbuf();
        cnls::RunSpec spec = cnls::parse_config(buf.str());
        if (spec.command != command) {
            std::cerr << "cnls: command line says \"" << command
                      << "\" but the config declares \"" << spec.command << "\"\n";
            return 2;
        }
        cnls::Report rep = cnls::run(spec, threads);
        for (const auto& p : cnls::write_outputs(rep, out_dir))
            std::cout << p.string() << "\n";
        if (!rep.solver_ok) {
            std::cerr << "cnls: run finished with failures; see report.json\n";
            return 3;
        }
        return 0;
    } catch (const cnls::ConfigError& e) {
        std::cerr << "cnls: config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "cnls: solver failure: " << e.what() << "\n";
        return 3;
    }
}
