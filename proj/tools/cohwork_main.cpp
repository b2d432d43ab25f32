// cohwork: full-counting-statistics work statistics for coherently prepared
// quantum systems, with an exact engine for the sudden-quenched transverse
// Ising chain.
//
// Subcommands:
//   run <config>         execute a JSON experiment config and emit tables
//   preset <name>        run a canned figure experiment (fig1a1..fig5)
//   validate <config>    check a config without running it
//   oracle-check         randomized closed-form vs dense-engine comparison
//
// Exit codes: 0 success, 2 config error, 3 capacity guard, 4 I/O error,
// 5 oracle-check deviation above tolerance.

#include "cohwork/cohwork.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitIo = 4;
constexpr int kExitOracle = 5;

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw cohwork::IoError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

// Sibling path for a secondary table: out.csv -> out_distribution.csv.
std::string derived_path(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "_" + suffix;
    return path.substr(0, dot) + "_" + suffix + path.substr(dot);
}

void emit_result(const cohwork::sweep::ExperimentResult& result,
                 const cohwork::sweep::ExperimentConfig& cfg) {
    using cohwork::sweep::emit;
    using cohwork::sweep::emit_to_file;
    if (cfg.output_path.empty()) {
        if (result.scalars) emit(*result.scalars, std::cout, cfg.format);
        if (result.distribution) emit(*result.distribution, std::cout, cfg.format);
        if (result.histogram) emit(*result.histogram, std::cout, cfg.format);
        return;
    }
    if (result.scalars) {
        emit_to_file(*result.scalars, cfg.output_path, cfg.format);
        std::cerr << "wrote " << cfg.output_path << "\n";
    }
    // Long-format tables go to sibling files; if there is no scalar table the
    // first long table takes the primary path.
    std::string dist_path = result.scalars || result.histogram
                                ? derived_path(cfg.output_path, "distribution")
                                : cfg.output_path;
    if (result.distribution && !result.scalars && !result.histogram)
        dist_path = cfg.output_path;
    if (result.distribution) {
        emit_to_file(*result.distribution, dist_path, cfg.format);
        std::cerr << "wrote " << dist_path << "\n";
    }
    if (result.histogram) {
        const std::string hist_path = result.scalars || result.distribution
                                          ? derived_path(cfg.output_path, "histogram")
                                          : cfg.output_path;
        emit_to_file(*result.histogram, hist_path, cfg.format);
        std::cerr << "wrote " << hist_path << "\n";
    }
}

int run_config(cohwork::sweep::ExperimentConfig cfg) {
    const auto result = cohwork::sweep::run_experiment(cfg);
    emit_result(result, cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Work statistics of coherently prepared quantum systems"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "execute a JSON experiment config");
    run->add_option("config", config_path, "path to the config document")->required();

    std::string preset_name, preset_out, preset_format;
    auto* preset = app.add_subcommand("preset", "run a canned figure experiment");
    preset->add_option("name", preset_name, "preset name (fig1a1..fig1c3, fig2..fig5)")
        ->required();
    preset->add_option("--out", preset_out, "output path (default <name>.<ext>)");
    preset->add_option("--format", preset_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", validate_path, "path to the config document")->required();

    int trials = 200;
    unsigned long seed = 12345;
    auto* oracle = app.add_subcommand("oracle-check",
                                      "randomized closed-form vs dense-engine comparison");
    oracle->add_option("--trials", trials, "number of randomized comparisons")
        ->check(CLI::PositiveNumber);
    oracle->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_config(cohwork::sweep::parse_config(read_file(config_path)));

        if (preset->parsed()) {
            auto cfg = cohwork::sweep::preset_config(preset_name);
            if (!preset_format.empty())
                cfg.format = preset_format == "json" ? cohwork::sweep::Format::json
                                                     : cohwork::sweep::Format::csv;
            cfg.output_path =
                preset_out.empty()
                    ? preset_name + (cfg.format == cohwork::sweep::Format::json ? ".json" : ".csv")
                    : preset_out;
            return run_config(std::move(cfg));
        }

        if (validate->parsed()) {
            cohwork::sweep::parse_config(read_file(validate_path));
            std::cout << "config ok: " << validate_path << "\n";
            return 0;
        }

        if (oracle->parsed()) {
            const double deviation =
                cohwork::sweep::oracle_max_deviation(trials, seed);
            std::cout << "oracle-check: " << trials << " trials, max deviation "
                      << deviation << "\n";
            if (deviation > 1e-9) {
                std::cerr << "oracle-check: deviation above 1e-9 tolerance\n";
                return kExitOracle;
            }
            return 0;
        }
    } catch (const cohwork::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cohwork::CapacityError& e) {
        std::cerr << "capacity guard: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const cohwork::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
