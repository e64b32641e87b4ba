#ifndef MIM_SIM_COMMANDS_HPP
#define MIM_SIM_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "config.hpp"
#include "run_output.hpp"

namespace mim::cli {

struct RunContext {
    Params& params;
    RunWriter& writer;
    std::uint64_t seed = 0;
    std::filesystem::path config_dir;  // relative data paths resolve against this
};

void run_optics_scan(RunContext& ctx);
void run_band_diagram(RunContext& ctx);
void run_fit(RunContext& ctx);
void run_cooling_map(RunContext& ctx);
void run_qnd_dist(RunContext& ctx);
void run_info_curve(RunContext& ctx);
void run_qnd_trace(RunContext& ctx);

std::vector<double> uniform_grid(double start, double stop, std::size_t n);

}  // namespace mim::cli

#endif
