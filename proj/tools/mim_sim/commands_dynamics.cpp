#include <cmath>

#include "commands.hpp"
#include "mim/linearized_dynamics.hpp"

namespace mim::cli {

using namespace mim::dynamics;

namespace {

bool symmetric(const std::vector<double>& axis) {
    const double scale = std::max(std::abs(axis.front()), std::abs(axis.back()));
    return std::abs(axis.front() + axis.back()) <= 1e-12 * scale;
}

json axis_json(const std::vector<double>& axis) {
    return {{"min", axis.front()}, {"max", axis.back()}, {"points", axis.size()}};
}

}  // namespace

void run_cooling_map(RunContext& ctx) {
    Params& p = ctx.params;
    const auto omegas = p.numbers("omega_m_over_kappa", {1.0});
    const auto couplings = p.numbers("g_over_kappa", {2.0});
    const double ratio = p.number("kappa_r_over_kappa_l", 1.0);
    const auto x_axis = linear_axis(p.number("x_scaled_min", -8.0), p.number("x_scaled_max", 8.0), p.count("x_points", 201));
    const auto delta_axis = linear_axis(p.number("delta_scaled_min", -8.0), p.number("delta_scaled_max", 8.0),
                                        p.count("delta_points", 201));
    const auto gamma_m = p.optional_number("gamma_m_over_kappa");
    const auto cross = p.optional_numbers("cross_section_x_scaled");
    const auto max_g = p.optional_numbers("max_cooling_g_over_kappa");
    p.finish();

    std::size_t panel = 0;
    for (double w : omegas) {
        for (double g : couplings) {
            MapSpec spec;
            spec.omega_m_over_kappa = w;
            spec.g_over_kappa = g;
            spec.kappa_r_over_kappa_l = ratio;
            spec.x_axis = x_axis;
            spec.delta_axis = delta_axis;
            spec.gamma_m_over_kappa = gamma_m;
            const auto map = cooling_map(spec);

            json defect = nullptr;
            if (symmetric(x_axis) && symmetric(delta_axis)) {
                const double d = antisymmetry_defect(map);
                // equal linewidths make the map exactly odd under (x, D) -> (-x, -D)
                if (ratio == 1.0 && !(d < 1e-10))
                    throw NumericError("cooling map failed the antisymmetry self-check (defect " + format_number(d) + ")");
                defect = d;
            }

            std::vector<std::string> header = {"x_scaled", "delta_scaled", "gamma_opt"};
            if (gamma_m) header.emplace_back("self_oscillating");
            Csv csv(header);
            std::size_t failed = 0;
            for (std::size_t ix = 0; ix < x_axis.size(); ++ix)
                for (std::size_t id = 0; id < delta_axis.size(); ++id) {
                    const std::size_t i = ix * delta_axis.size() + id;
                    if (!map.node_errors[i].empty()) ++failed;
                    std::vector<double> row = {x_axis[ix], delta_axis[id], map.values[i]};
                    if (gamma_m) row.push_back(map.self_oscillating[i] ? 1.0 : 0.0);
                    csv.row(row);
                }
            const std::string stem = "map_" + std::to_string(panel);
            ctx.writer.add(stem + ".csv", csv.text());
            ctx.writer.add_json(stem + ".json", {{"omega_m_over_kappa", w},
                                                 {"g_over_kappa", g},
                                                 {"kappa_r_over_kappa_l", ratio},
                                                 {"gamma_m_over_kappa", gamma_m ? json(*gamma_m) : json(nullptr)},
                                                 {"saturation_over_kappa", map.saturation},
                                                 {"x_scaled", axis_json(x_axis)},
                                                 {"delta_scaled", axis_json(delta_axis)},
                                                 {"antisymmetry_defect", defect},
                                                 {"failed_nodes", failed}});

            if (cross) {
                Csv cs({"x_scaled", "delta_scaled", "gamma_opt"});
                for (double x : *cross) {
                    const auto cut = cooling_cross_section(spec, x);
                    for (std::size_t id = 0; id < delta_axis.size(); ++id) cs.row({x, delta_axis[id], cut[id]});
                }
                ctx.writer.add("cross_sections_" + std::to_string(panel) + ".csv", cs.text());
            }
            ++panel;
        }
    }

    if (max_g) {
        Csv csv({"omega_m_over_kappa", "g_over_kappa", "x_scaled", "max_cooling"});
        for (double w : omegas)
            for (double g : *max_g)
                for (double x : x_axis) csv.row({w, g, x, max_cooling(w, g, x)});
        ctx.writer.add("max_cooling.csv", csv.text());
    }
}

}  // namespace mim::cli
