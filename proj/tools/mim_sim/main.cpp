#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "mim/parallel.hpp"
#include "run_output.hpp"

namespace fs = std::filesystem;
using namespace mim::cli;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

struct Options {
    std::string config;
    std::string preset;
    std::string out = "mim-sim-out";
    std::uint64_t seed = 1;
};

int run(const std::string& name, const std::function<void(RunContext&)>& body, const Options& o) {
    std::optional<fs::path> config;
    if (!o.config.empty()) config = fs::path(o.config);
    std::optional<std::string> preset;
    if (!o.preset.empty()) preset = o.preset;
    if (!config && !preset) throw ConfigError(name + " needs --config FILE or --preset NAME");

    Params params = load_params(name, config, preset);
    RunWriter writer{fs::path(o.out)};
    if (config) writer.add_input(*config);
    RunContext ctx{params, writer, o.seed, config ? fs::absolute(*config).parent_path() : fs::current_path()};
    body(ctx);
    writer.commit({{"subcommand", name},
                   {"preset", preset ? json(*preset) : json(nullptr)},
                   {"seed", o.seed},
                   {"threads", mim::worker_count()},
                   {"config", params.resolved()}});
    std::cout << "wrote " << o.out << "/manifest.json\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Membrane-in-the-middle cavity simulations. MIM_SIM_THREADS caps worker threads.", "mim-sim"};
    app.require_subcommand(1);

    const std::map<std::string, std::pair<std::function<void(RunContext&)>, std::string>> commands = {
        {"optics-scan", {run_optics_scan, "finesse, transmission and reflection versus membrane position"}},
        {"band-diagram", {run_band_diagram, "resonance frequencies versus membrane position"}},
        {"fit", {run_fit, "fit Im(n) to a finesse scan"}},
        {"cooling-map", {run_cooling_map, "normalized cooling rate over position and detuning"}},
        {"qnd-dist", {run_qnd_dist, "measured quantum and classical distributions"}},
        {"info-curve", {run_info_curve, "mutual information at the optimal averaging time"}},
        {"qnd-trace", {run_qnd_trace, "quantum jump trace and sliding averages"}},
    };

    Options opts;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands) {
        std::string help = entry.second;
        const auto presets = preset_names(name);
        if (!presets.empty()) {
            help += " (presets:";
            for (const auto& p : presets) help += " " + p;
            help += ")";
        }
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config, "JSON parameter file");
        sub->add_option("--preset", opts.preset, "built-in parameter set; the config file overrides it");
        sub->add_option("--out", opts.out, "output directory")->capture_default_str();
        sub->add_option("--seed", opts.seed, "random seed")->capture_default_str();
        subs[name] = sub;
    }
    std::string verify_dir;
    CLI::App* verify = app.add_subcommand("verify", "check the digests in a run's manifest");
    verify->add_option("--out", verify_dir, "output directory of the run")->required();
    verify->add_option("--config", opts.config, "ignored");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (verify->parsed()) {
            const auto problems = verify_manifest(fs::path(verify_dir));
            for (const auto& p : problems) std::cerr << p << "\n";
            if (!problems.empty()) return kIo;
            std::cout << "all digests match\n";
            return kOk;
        }
        for (const auto& [name, entry] : commands)
            if (subs[name]->parsed()) return run(name, entry.first, opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const mim::InvalidArgument& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return kConfig;
    } catch (const mim::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const IoError& e) {
        std::cerr << "I/O failure: " << e.what() << "\n";
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O failure: " << e.what() << "\n";
        return kIo;
    }
    return kConfig;
}
