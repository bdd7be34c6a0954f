// qnd: command-line front end.
//
//   qnd <analytic|lindblad|backaction|fig2|fig3|repeat> [--config PATH]
//       [--set key=value]... [--out PATH] [--threads N]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.

#include "qnd/config.hpp"
#include "qnd/csv.hpp"
#include "qnd/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qnd::IoError("cannot open config", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

qnd::RunConfig build_config(const std::string& mode, const std::string& config_path,
                            const std::vector<std::string>& overrides, int threads_flag) {
    // QND_THREADS is only a default: the file, --set and --threads win over it.
    qnd::RunConfig base;
    if (const char* env = std::getenv("QND_THREADS"); env && *env) {
        try {
            qnd::set_config_value(base, "threads", env);
        } catch (const std::invalid_argument& e) {
            throw qnd::ConfigError(std::string("QND_THREADS: ") + e.what());
        }
    }
    qnd::RunConfig cfg = config_path.empty()
                             ? base
                             : qnd::parse_config_text(read_file(config_path), base);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw qnd::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        const std::string key = qnd::detail::trim(std::string_view(kv).substr(0, eq));
        try {
            qnd::set_config_value(cfg, key, std::string_view(kv).substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw qnd::ConfigError("--set " + key + ": " + e.what());
        }
    }
    if (threads_flag > 0) cfg.threads = threads_flag;
    cfg.mode = qnd::parse_mode(mode);
    try {
        qnd::validate_invariants(cfg);
    } catch (const std::invalid_argument& e) {
        throw qnd::ConfigError(e.what());
    }
    qnd::require_mode(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QND readout of a qubit through a driven, damped resonator"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
    int threads = 0;

    for (const char* name : {"analytic", "lindblad", "backaction", "fig2", "fig3", "repeat"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "config file (key = value lines)");
        sub->add_option("--set", overrides, "override, applied after the file")
            ->type_name("KEY=VALUE");
        sub->add_option("--out", out_path, "CSV output path (default: output_path or stdout)");
        sub->add_option("--threads", threads, "worker threads for sweeps")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    try {
        const qnd::RunConfig cfg = build_config(mode, config_path, overrides, threads);
        const qnd::SweepResult result = qnd::run(cfg);
        const std::string path = out_path.empty() ? cfg.output_path : out_path;
        if (path.empty()) {
            std::cout << qnd::to_csv(result);
            std::cout.flush();
            if (!std::cout) throw qnd::IoError("write failed", "<stdout>");
        } else {
            qnd::emit_csv(result, path);
        }
    } catch (const qnd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qnd::NumericalError& e) {
        std::cerr << "numerical failure at t = " << e.time() << ": " << e.what() << '\n';
        return kExitNumerical;
    } catch (const qnd::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
