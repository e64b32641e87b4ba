#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "mim/errors.hpp"
#include "mim/qnd_stats.hpp"
#include "mim/random.hpp"

namespace mim::qnd {

std::uint32_t JumpTrace::occupation_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return occupations.front();
    return occupations[static_cast<std::size_t>(it - times.begin()) - 1];
}

JumpTrace simulate_jump_trace(const BathParams& bath, double duration, std::uint64_t seed,
                              const JumpTraceOptions& options) {
    bath.validate();
    if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
    Rng rng(seed);
    std::uint32_t n = 0;
    if (options.initial) {
        n = *options.initial;
    } else if (bath.n_init > 0.0) {
        const double q = bath.n_init / (1.0 + bath.n_init);
        n = static_cast<std::uint32_t>(std::floor(std::log(rng.uniform()) / std::log(q)));
    }
    JumpTrace trace;
    trace.seed = seed;
    trace.duration = duration;
    trace.bath = bath;
    trace.times.push_back(0.0);
    trace.occupations.push_back(n);
    double t = 0.0;
    while (true) {
        const double up = bath.rate_up(n), down = bath.rate_down(n);
        const double total = up + down;
        if (total <= 0.0) break;
        t += rng.exponential(total);
        if (t >= duration) break;
        if (trace.times.size() > options.event_cap)
            throw EventCapError("more than " + std::to_string(options.event_cap) +
                                " events; shorten the duration");
        n = rng.uniform() * total < up ? n + 1 : n - 1;
        trace.times.push_back(t);
        trace.occupations.push_back(n);
    }
    return trace;
}

namespace {

std::vector<double> gaussian_kernel(double sigma, double dt, std::size_t half) {
    std::vector<double> c(2 * half + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double x = (static_cast<double>(i) - static_cast<double>(half)) * dt;
        c[i] = std::exp(-0.5 * x * x / (sigma * sigma));
        sum += c[i];
    }
    for (double& v : c) v /= sum;
    return c;
}

double squared_sum(const std::vector<double>& c) {
    double s = 0.0;
    for (double v : c) s += v * v;
    return s;
}

}  // namespace

AveragedTrace sliding_average_trace(const JumpTrace& trace, const MeasurementNoise& noise, double t_avg,
                                    std::uint64_t seed, std::optional<double> dt_opt) {
    if (!(t_avg > 0.0)) throw InvalidArgument("averaging time must be positive");
    if (!(noise.s_nn >= 0.0)) throw InvalidArgument("S_nn must be >= 0");
    const double dt = dt_opt.value_or(t_avg / 20.0);
    if (!(dt > 0.0)) throw InvalidArgument("sampling step must be positive");
    if (dt > t_avg / 10.0) throw SamplingRateError("sampling step exceeds t_avg / 10");

    // sum c^2 = dt / t_avg fixes the width; continuum value t_avg / (2 sqrt(pi))
    const double target = dt / t_avg;
    const double guess = t_avg / (2.0 * std::sqrt(M_PI));
    auto half_for = [&](double sigma) { return static_cast<std::size_t>(std::ceil(8.0 * sigma / dt)); };
    auto f = [&](double sigma) { return squared_sum(gaussian_kernel(sigma, dt, half_for(sigma))) - target; };
    boost::uintmax_t iters = 100;
    const auto bracket = boost::math::tools::toms748_solve(f, 0.25 * guess, 4.0 * guess,
                                                           boost::math::tools::eps_tolerance<double>(50), iters);
    const double sigma = 0.5 * (bracket.first + bracket.second);
    const std::size_t half = half_for(sigma);
    const auto kernel = gaussian_kernel(sigma, dt, half);

    const auto cells = static_cast<std::size_t>(std::floor(trace.duration / dt));
    if (cells < 2 * half + 1) throw SamplingRateError("trace shorter than the averaging kernel");
    // time average of n over each cell plus white noise of variance S_nn / dt
    std::vector<double> raw(cells, 0.0);
    std::size_t ev = 0;
    for (std::size_t j = 0; j < cells; ++j) {
        const double a = static_cast<double>(j) * dt, b = a + dt;
        while (ev + 1 < trace.times.size() && trace.times[ev + 1] <= a) ++ev;
        double acc = 0.0, from = a;
        std::size_t k = ev;
        while (k + 1 < trace.times.size() && trace.times[k + 1] < b) {
            acc += trace.occupations[k] * (trace.times[k + 1] - from);
            from = trace.times[k + 1];
            ++k;
        }
        acc += trace.occupations[k] * (b - from);
        raw[j] = acc / dt;
    }
    if (noise.s_nn > 0.0) {
        Rng rng(seed);
        const double sd = std::sqrt(noise.s_nn / dt);
        for (double& v : raw) v += sd * rng.normal();
    }

    AveragedTrace out;
    out.dt = dt;
    out.kernel_sigma = sigma;
    for (std::size_t i = half; i + half < cells; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * raw[i - half + k];
        out.t.push_back((static_cast<double>(i) + 0.5) * dt);
        out.n_avg.push_back(acc);
    }
    return out;
}

}  // namespace mim::qnd
