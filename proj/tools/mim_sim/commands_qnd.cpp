#include <algorithm>
#include <cmath>

#include "commands.hpp"
#include "mim/constants.hpp"
#include "mim/qnd_stats.hpp"
#include "mim/random.hpp"

namespace mim::cli {

using namespace mim::qnd;

namespace {

// Bath at each requested initial occupation.
std::vector<BathParams> read_baths(Params& p) {
    const double omega = 2.0 * kPi * p.number("omega_m_hz", 1e5);
    const double gamma = omega * p.number("gamma_over_omega_m", 1.2e-7);
    const auto n_eq = p.optional_number("n_eq");
    const auto t_bath = p.optional_number("t_bath_k");
    const auto n_init = p.optional_numbers("n_init");
    const auto t_init = p.optional_numbers("t_init_k");
    if (n_eq && t_bath) throw ConfigError("give either n_eq or t_bath_k, not both");
    if (n_init && t_init) throw ConfigError("give either n_init or t_init_k, not both");

    std::vector<BathParams> out;
    auto add = [&](std::optional<double> init_occupation, std::optional<double> init_temperature) {
        BathParams b;
        if (n_eq) {
            b.omega_m = omega;
            b.gamma = gamma;
            b.n_eq = *n_eq;
            b.n_init = init_occupation.value_or(init_temperature ? bose_einstein(omega, *init_temperature) : 0.0);
        } else {
            b = BathParams::from_temperatures(omega, gamma, t_bath.value_or(0.3), init_temperature.value_or(0.0));
            if (init_occupation) b.n_init = *init_occupation;
        }
        b.validate();
        out.push_back(b);
    };
    if (t_init) {
        for (double t : *t_init) add(std::nullopt, t);
    } else {
        for (double n : n_init.value_or(std::vector<double>{0.0})) add(n, std::nullopt);
    }
    return out;
}

json bath_json(const BathParams& b) {
    return {{"omega_m_rad_s", b.omega_m}, {"gamma_per_s", b.gamma}, {"n_eq", b.n_eq}, {"n_init", b.n_init}, {"tau_s", b.tau()}};
}

// Cells holding all but 1e-12 of the mass of either distribution.
std::pair<std::size_t, std::size_t> support(const EnergyDistribution& a, const EnergyDistribution& b) {
    auto range = [](const EnergyDistribution& d) {
        const double cut = 1e-12 / d.m_step;
        std::size_t lo = 0, hi = d.size();
        double acc = 0.0;
        while (lo < d.size() && (acc += d.density[lo]) < cut) ++lo;
        acc = 0.0;
        while (hi > lo + 1 && (acc += d.density[hi - 1]) < cut) --hi;
        return std::pair{lo, hi};
    };
    const auto [alo, ahi] = range(a);
    const auto [blo, bhi] = range(b);
    return {std::min(alo, blo), std::max(ahi, bhi)};
}

// Central interval holding `mass` of the distribution.
std::pair<double, double> central_window(const EnergyDistribution& d, double mass) {
    const double tail = 0.5 * (1.0 - mass);
    double acc = 0.0;
    double lo = d.m(0), hi = d.m(d.size() - 1);
    bool found_lo = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        acc += d.density[i] * d.m_step;
        if (!found_lo && acc >= tail) {
            lo = d.m(i);
            found_lo = true;
        }
        if (acc >= 1.0 - tail) {
            hi = d.m(i);
            break;
        }
    }
    return {lo, hi};
}

}  // namespace

void run_qnd_dist(RunContext& ctx) {
    Params& p = ctx.params;
    const auto baths = read_baths(p);
    const auto r_values = p.optional_numbers("r_values");
    const auto t_avg_over_tau = p.optional_number("t_avg_over_tau");
    p.finish();
    if (!r_values) throw ConfigError("missing required key 'r_values' for qnd-dist");

    std::size_t index = 0;
    for (const auto& bath : baths) {
        for (double r : *r_values) {
            if (!(r > 0.0)) throw ConfigError("r_values must be positive");
            const double tau = bath.tau();
            const MeasurementNoise noise{tau / (4.0 * r)};
            double t_avg = 0.0;
            json optimum = nullptr;
            if (t_avg_over_tau) {
                t_avg = *t_avg_over_tau * tau;
            } else {
                const auto opt = optimize_averaging_time(bath, noise);
                t_avg = opt.t_opt;
                optimum = {{"info_bits", opt.info_bits}, {"at_boundary", opt.at_boundary}};
            }
            const auto pair = measured_distributions(bath, noise, t_avg);
            const auto [lo, hi] = support(pair.quantum, pair.classical);
            const std::string stem = "dist_" + std::to_string(index);
            for (const auto* d : {&pair.quantum, &pair.classical}) {
                const bool quantum = d == &pair.quantum;
                Csv csv({"m", "quanta_density"});
                for (std::size_t i = lo; i < hi; ++i) csv.row({d->m(i), d->density[i]});
                const std::string name = stem + (quantum ? "_quantum" : "_classical");
                const auto [w_lo, w_hi] = central_window(*d, 0.9);
                ctx.writer.add(name + ".csv", csv.text());
                ctx.writer.add_json(name + ".json", {{"kind", to_string(d->kind)},
                                                     {"t_avg_s", t_avg},
                                                     {"R", r},
                                                     {"S_nn", noise.s_nn},
                                                     {"mean", d->mean},
                                                     {"variance", d->variance},
                                                     {"mean_shift", quantum ? pair.mean_shift : 0.0},
                                                     {"m_step", d->m_step},
                                                     {"window_90", {w_lo, w_hi}},
                                                     {"local_maxima", local_maxima(*d)},
                                                     {"bath", bath_json(bath)}});
            }
            ctx.writer.add_json("report_" + std::to_string(index) + ".json",
                                {{"S_nn", noise.s_nn},
                                 {"t_avg", t_avg},
                                 {"R", figure_of_merit_R(bath, noise)},
                                 {"I_bits", mutual_information(pair.quantum, pair.classical)},
                                 {"H_q_bits", shannon_entropy(pair.quantum)},
                                 {"H_cl_bits", shannon_entropy(pair.classical)},
                                 {"mean_shift", pair.mean_shift},
                                 {"n_init", bath.n_init},
                                 {"optimum", optimum}});
            ++index;
        }
    }
}

void run_info_curve(RunContext& ctx) {
    Params& p = ctx.params;
    const auto baths = read_baths(p);
    const auto r_values = p.optional_numbers("r_values");
    p.finish();
    if (!r_values) throw ConfigError("missing required key 'r_values' for info-curve");

    Csv csv({"n_init", "R", "S_nn", "t_opt_s", "t_opt_over_tau", "I_bits", "at_boundary"});
    for (const auto& bath : baths) {
        for (double r : *r_values) {
            if (!(r > 0.0)) throw ConfigError("r_values must be positive");
            const double tau = bath.tau();
            const MeasurementNoise noise{tau / (4.0 * r)};
            const auto opt = optimize_averaging_time(bath, noise);
            csv.row({bath.n_init, r, noise.s_nn, opt.t_opt, opt.t_opt / tau, opt.info_bits, opt.at_boundary ? 1.0 : 0.0});
        }
    }
    ctx.writer.add("info_curve.csv", csv.text());
    ctx.writer.add_json("info_curve.json", {{"bath", bath_json(baths.front())},
                                            {"search_range_over_tau", {1e-3, 1e2}},
                                            {"t_tolerance", 0.01}});
}

void run_qnd_trace(RunContext& ctx) {
    Params& p = ctx.params;
    const auto baths = read_baths(p);
    const double duration_over_tau = p.number("duration_over_tau", 10.0);
    const auto s_nn_over_tau = p.numbers("s_nn_over_tau", {0.001});
    const auto t_avg_over_tau = p.numbers("t_avg_over_tau", {0.1});
    const auto dt_over_tau = p.optional_number("dt_over_tau");
    p.finish();
    if (baths.size() != 1) throw ConfigError("qnd-trace takes a single initial occupation");
    const BathParams& bath = baths.front();
    const double tau = bath.tau();

    const auto trace = simulate_jump_trace(bath, duration_over_tau * tau, Rng::derive(ctx.seed, 0));
    Csv events({"t", "n"});
    for (std::size_t i = 0; i < trace.times.size(); ++i)
        events.row({trace.times[i], static_cast<double>(trace.occupations[i])});
    ctx.writer.add("trace.csv", events.text());

    json averaged = json::array();
    std::uint64_t stream = 1;
    for (std::size_t i = 0; i < s_nn_over_tau.size(); ++i) {
        for (std::size_t j = 0; j < t_avg_over_tau.size(); ++j) {
            const MeasurementNoise noise{s_nn_over_tau[i] * tau};
            const double t_avg = t_avg_over_tau[j] * tau;
            std::optional<double> dt;
            if (dt_over_tau) dt = *dt_over_tau * tau;
            const auto avg = sliding_average_trace(trace, noise, t_avg, Rng::derive(ctx.seed, stream++), dt);
            Csv csv({"t", "n_avg"});
            for (std::size_t k = 0; k < avg.t.size(); ++k) csv.row({avg.t[k], avg.n_avg[k]});
            const std::string name = "avg_" + std::to_string(i) + "_" + std::to_string(j) + ".csv";
            ctx.writer.add(name, csv.text());
            averaged.push_back({{"file", name},
                                {"S_nn", noise.s_nn},
                                {"t_avg_s", t_avg},
                                {"snr", snr_gaussian(t_avg, noise.s_nn)},
                                {"dt_s", avg.dt},
                                {"kernel_sigma_s", avg.kernel_sigma}});
        }
    }
    ctx.writer.add_json("traces.json", {{"bath", bath_json(bath)},
                                        {"duration_s", trace.duration},
                                        {"events", trace.times.size() - 1},
                                        {"averaged", averaged}});
}

}  // namespace mim::cli
