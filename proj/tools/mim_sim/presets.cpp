#include <map>

#include "config.hpp"

namespace mim::cli {

namespace {

json reference_bath() {
    return {{"omega_m_hz", 1e5}, {"gamma_over_omega_m", 1.2e-7}, {"t_bath_k", 0.3}};
}

json with(json base, const json& extra) {
    for (const auto& [k, v] : extra.items()) base[k] = v;
    return base;
}

const std::map<std::string, std::map<std::string, json>>& presets() {
    static const std::map<std::string, std::map<std::string, json>> table = {
        {"band-diagram",
         {{"fig2",
           {{"power_reflectivity", {0.0, 0.08, 0.45, 0.773, 0.982, 0.999}},
            {"thickness_m", 50e-9},
            {"wavelength_m", 1064e-9},
            {"points", 401}}}}},
        {"optics-scan",
         {{"fig3",
           {{"wavelength_m", 1064e-9},
            {"length_m", 0.067},
            {"thickness_m", 50e-9},
            {"index_real", 2.2},
            {"index_imag", {0.0, 1.5e-4}},
            {"mirror_r", 0.99991},
            {"mirror_t", 5.28e-3},
            {"dx_start_m", 0.0},
            {"dx_stop_m", 1064e-9},
            {"points", 401}}},
          {"fig8-limit",
           {{"wavelength_m", 1064e-9},
            {"length_m", 0.067},
            {"thickness_m", 50e-9},
            {"index_real", 2.15},
            {"index_imag", 1.5e-4},
            {"empty_finesse", {1e5, 3.14e5, 1e6}},
            {"dx_start_m", 0.0},
            {"dx_stop_m", 532e-9},
            {"points", 201}}}}},
        {"fit",
         {{"fig7",
           {{"empty_finesse", 16500.0},
            {"mirror_r", 0.99991},
            {"mirror_t", 5.52e-3},
            {"thickness_m", 50e-9},
            {"index_real", 2.2},
            {"synthetic_index_imag", 1.5e-4},
            {"synthetic_noise", 0.02},
            {"dx_start_m", 0.0},
            {"dx_stop_m", 1064e-9},
            {"points", 201}}},
          {"fig9",
           {{"empty_finesse", 205000.0},
            {"thickness_m", 50e-9},
            {"index_real", 2.2},
            {"synthetic_index_imag", 2.3e-4},
            {"synthetic_noise", 0.005},
            {"dx_start_m", 0.0},
            {"dx_stop_m", 1064e-9},
            {"points", 201}}}}},
        {"cooling-map",
         {{"fig8a",
           {{"omega_m_over_kappa", 1.0},
            {"g_over_kappa", 2.0},
            {"x_scaled_min", -8.0},
            {"x_scaled_max", 8.0},
            {"x_points", 201},
            {"delta_scaled_min", -8.0},
            {"delta_scaled_max", 8.0},
            {"delta_points", 201},
            {"cross_section_x_scaled", {0.0, 0.5, 1.0, 1.5, 2.0, 4.0, 8.0}},
            {"max_cooling_g_over_kappa", {0.5, 1.0, 2.0, 4.0, 8.0}}}},
          {"fig9",
           {{"omega_m_over_kappa", {0.25, 1.0, 4.0}},
            {"g_over_kappa", {0.5, 1.0, 2.0}},
            {"x_scaled_min", -10.0},
            {"x_scaled_max", 10.0},
            {"x_points", 101},
            {"delta_scaled_min", -10.0},
            {"delta_scaled_max", 10.0},
            {"delta_points", 101}}}}},
        {"qnd-dist",
         {{"fig12", with(reference_bath(), {{"n_init", 0.0}, {"r_values", {200.0, 61.0, 11.0, 1.0}}})},
          {"fig13", with(reference_bath(), {{"n_init", {0.0, 1.0, 2.0, 4.0}}, {"r_values", 11.0}})}}},
        {"info-curve",
         {{"fig11",
           with(reference_bath(), {{"n_init", 0.0},
                               {"r_values", {0.3, 1.0, 2.0, 5.0, 11.0, 20.0, 61.0, 100.0, 200.0, 500.0, 1000.0}}})},
          {"fig12", with(reference_bath(), {{"n_init", 0.0}, {"r_values", {200.0, 61.0, 11.0, 1.0}}})},
          {"fig13", with(reference_bath(), {{"n_init", {0.0, 0.5, 1.0, 2.0, 3.0, 4.0}}, {"r_values", 11.0}})}}},
        {"qnd-trace",
         {{"fig10-traces",
           with(reference_bath(), {{"n_init", 0.0},
                               {"duration_over_tau", 10.0},
                               {"s_nn_over_tau", {0.001, 0.004}},
                               {"t_avg_over_tau", {0.01, 0.05, 0.1, 0.2, 0.5, 1.0}}})}}},
    };
    return table;
}

}  // namespace

json preset_table(const std::string& subcommand, const std::string& name) {
    const auto& all = presets();
    const auto sub = all.find(subcommand);
    if (sub != all.end()) {
        const auto it = sub->second.find(name);
        if (it != sub->second.end()) return it->second;
    }
    std::string known;
    for (const auto& n : preset_names(subcommand)) known += " " + n;
    throw ConfigError("no preset '" + name + "' for " + subcommand + (known.empty() ? "" : "; available:" + known));
}

std::vector<std::string> preset_names(const std::string& subcommand) {
    std::vector<std::string> out;
    const auto& all = presets();
    const auto sub = all.find(subcommand);
    if (sub != all.end())
        for (const auto& [name, table] : sub->second) out.push_back(name);
    return out;
}

}  // namespace mim::cli
