#pragma once

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>

#include "CLI11.hpp"

#include "heatflat/io.hpp"
#include "heatflat/scenario.hpp"

namespace heatflat::cli {

inline constexpr const char* kOutDirEnv = "HEATFLAT_OUT_DIR";

inline std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
    return "results";
}

inline void print_report(std::ostream& out, const ValidationReport& rep) {
    for (const auto& item : rep.items) {
        out << '[' << to_string(item.severity) << "] " << item.check << ": " << item.message << '\n';
    }
    if (rep.ok()) {
        out << "result: valid (" << rep.count(Severity::Warning) << " warning(s))\n";
    } else {
        out << "result: invalid (" << rep.count(Severity::Error) << " error(s), " << rep.count(Severity::Warning)
            << " warning(s))\n";
    }
}

inline int run_and_write(const ScenarioConfig& cfg, const std::filesystem::path& dir, std::ostream& out) {
    const auto result = run_scenario(cfg);
    const auto files = write_outputs(dir, cfg, result);
    out << "wrote " << files.run_csv.string() << " (" << result.log.size() << " rows)\n";
    out << "wrote " << files.summary.string() << '\n';
    if (!files.field_csv.empty()) out << "wrote " << files.field_csv.string() << '\n';
    write_summary(out, cfg, result.summary);
    return 0;
}

/// Entry point shared by the executable and the tests.
///   run --config <file> [--out <dir>]
///   validate --config <file> [--echo]
///   paper-scenario [--out <dir>] [--uncertain] [--decimation N]
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flatness-based tracking control of the boundary-actuated heat equation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool echo = false;
    bool uncertain = false;
    std::size_t decimation = 0;

    auto* run = app.add_subcommand("run", "Simulate a scenario described by a JSON config");
    run->add_option("--config", config_path, "Scenario JSON file")->required();
    run->add_option("--out", out_dir, "Output directory (default: config 'output', then $HEATFLAT_OUT_DIR)");

    auto* validate = app.add_subcommand("validate", "Check admissibility, gains and CFL; print margins");
    validate->add_option("--config", config_path, "Scenario JSON file")->required();
    validate->add_flag("--echo", echo, "Print the normalised config as JSON");

    auto* paper = app.add_subcommand("paper-scenario", "Run the built-in four-phase tracking experiment");
    paper->add_option("--out", out_dir, "Output directory (default: $HEATFLAT_OUT_DIR or ./results)");
    paper->add_flag("--uncertain", uncertain, "Plan with the nominal parameters d_nom = 0.06, D_nom = 9");
    paper->add_option("--decimation", decimation, "Log every N-th step")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*validate) {
            const auto cfg = load_scenario(config_path);
            const auto rep = validate_scenario(cfg);
            print_report(out, rep);
            if (echo) out << to_json(cfg).dump(2) << '\n';
            return rep.ok() ? 0 : 1;
        }
        if (*run) {
            const auto cfg = load_scenario(config_path);
            const std::filesystem::path dir =
                !out_dir.empty() ? std::filesystem::path(out_dir)
                                 : (!cfg.output.empty() ? std::filesystem::path(cfg.output) : default_out_dir());
            return run_and_write(cfg, dir, out);
        }
        if (*paper) {
            auto cfg = paper_scenario(uncertain);
            if (decimation > 0) cfg.decimation = decimation;
            const std::filesystem::path dir = !out_dir.empty() ? std::filesystem::path(out_dir) : default_out_dir();
            print_report(out, validate_scenario(cfg));
            return run_and_write(cfg, dir, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace heatflat::cli
