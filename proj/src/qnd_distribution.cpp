#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "mim/constants.hpp"
#include "mim/errors.hpp"
#include "mim/parallel.hpp"
#include "mim/qnd_stats.hpp"

namespace mim::qnd {

namespace {

const complex kI{0.0, 1.0};

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

// In-place unnormalized DFT, sign -1 (forward) or +1 (backward).
void dft(std::vector<complex>& data, int sign) {
    static_assert(sizeof(complex) == sizeof(fftw_complex));
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr,
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw NumericError("FFT planning failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
}

void update_moments(EnergyDistribution& d) {
    double mass = 0.0, first = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        mass += d.density[i];
        first += d.density[i] * d.m(i);
    }
    d.mean = first / mass;
    double second = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.m(i) - d.mean;
        second += d.density[i] * x * x;
    }
    d.variance = second / mass;
}

// Clips ringing at `tolerance` times the peak, renormalizes and checks that no
// mass sits in the outer bands of the grid.
void finalize_density(EnergyDistribution& d, const InversionOptions& o) {
    const double peak = *std::max_element(d.density.begin(), d.density.end());
    if (!(peak > 0.0)) throw NegativeDensityError("inverted density has no positive values");
    const double floor = *std::min_element(d.density.begin(), d.density.end());
    if (floor < -o.negativity_tolerance * peak)
        throw NegativeDensityError("inverted density reaches " + std::to_string(floor / peak) +
                                   " of its peak; the grid is too coarse or too narrow");
    double mass = 0.0;
    for (double& v : d.density) {
        v = std::max(v, 0.0);
        mass += v;
    }
    mass *= d.m_step;
    for (double& v : d.density) v /= mass;
    const std::size_t band = (d.size() + 31) / 32;
    const std::size_t lo_band = std::min(o.lower_guard.value_or(band), d.size());
    const std::size_t hi_band = std::min(o.upper_guard.value_or(band), d.size());
    double tail = 0.0;
    for (std::size_t i = 0; i < lo_band; ++i) tail += d.density[i];
    for (std::size_t i = 0; i < hi_band; ++i) tail += d.density[d.size() - 1 - i];
    tail *= d.m_step;
    if (tail > o.tail_tolerance)
        throw AliasingError("mass " + std::to_string(tail) + " near the grid edge; widen the m window");
    update_moments(d);
}

}  // namespace

double EnergyDistribution::mass() const {
    double s = 0.0;
    for (double v : density) s += v;
    return s * m_step;
}

EnergyDistribution invert_gen_fn(const GeneratingSamples& samples, const InversionOptions& o) {
    const std::size_t n = samples.lambda.size();
    if (n < 4 || n % 2 != 0) throw InvalidArgument("inversion needs an even lambda grid of at least 4 points");
    if (samples.values.size() != n) throw InvalidArgument("lambda and value arrays differ in length");
    const double dl = samples.lambda[1] - samples.lambda[0];
    for (std::size_t k = 0; k < n; ++k) {
        const double expect = (static_cast<double>(k) - static_cast<double>(n / 2)) * dl;
        if (std::abs(samples.lambda[k] - expect) > 1e-9 * dl * (1.0 + std::abs(expect / dl)))
            throw InvalidArgument("lambda grid is not the uniform conjugate grid");
    }
    const double dm = 2.0 * kPi / (static_cast<double>(n) * dl);
    if (o.lattice && std::abs(dm - samples.t) > 1e-9 * samples.t)
        throw InvalidArgument("lattice inversion needs the lambda grid to span one period 2 pi / t");
    if (o.resolution < 0.0) throw InvalidArgument("resolution must be >= 0");

    auto factor = [&](double l) { return std::exp(-0.5 * l * l * o.resolution * o.resolution); };
    if (!o.lattice) {
        const double edge = std::max(std::abs(samples.values.front()) * factor(samples.lambda.front()),
                                     std::abs(samples.values.back()) * factor(samples.lambda.back()));
        if (!(edge < o.edge_tolerance))
            throw InsufficientDecayError("|P~| = " + std::to_string(edge) +
                                         " at the lambda grid edge; widen the grid or add resolution");
    }

    std::vector<complex> buf(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double l = samples.lambda[k];
        const std::size_t slot = (k + n / 2) % n;  // signed index k - n/2, wrapped
        buf[slot] = samples.values[k] * factor(l) * std::exp(kI * l * o.m_min);
    }
    dft(buf, +1);

    EnergyDistribution d;
    d.m_min = o.m_min;
    d.m_step = dm;
    d.kind = samples.kind;
    d.t = samples.t;
    d.shift = samples.shift;
    d.density.resize(n);
    const double scale = dl / (2.0 * kPi);
    for (std::size_t j = 0; j < n; ++j) d.density[j] = buf[j].real() * scale;
    InversionOptions checks = o;
    if (o.lattice && !o.lower_guard) checks.lower_guard = 0;
    finalize_density(d, checks);
    return d;
}

EnergyDistribution convolve_noise(const EnergyDistribution& dist, const MeasurementNoise& noise, double t_avg) {
    noise.validate();
    if (!(t_avg > 0.0)) throw InvalidArgument("t_avg must be positive");
    if (dist.t > 0.0 && std::abs(dist.t - t_avg) > 1e-12 * t_avg)
        throw InvalidArgument("t_avg differs from the distribution's averaging time");
    const double sigma = std::sqrt(noise.s_nn * t_avg);
    if (sigma < 2.0 * dist.m_step)
        throw GridResolutionError("noise width spans fewer than 2 grid cells; refine the m grid");
    const std::size_t n = dist.size();
    // the convolution is circular: mass this close to an edge would wrap
    const auto reach = std::min(n / 2, static_cast<std::size_t>(std::ceil(5.0 * sigma / dist.m_step)));
    double edge_mass = 0.0;
    for (std::size_t j = 0; j < reach; ++j) edge_mass += std::abs(dist.density[j]) + std::abs(dist.density[n - 1 - j]);
    if (edge_mass * dist.m_step > 1e-6)
        throw AliasingError("mass within 5 noise widths of the grid edge would wrap around; widen the m window");
    std::vector<complex> buf(n);
    for (std::size_t j = 0; j < n; ++j) buf[j] = dist.density[j];
    dft(buf, -1);
    const double dnu = 2.0 * kPi / (static_cast<double>(n) * dist.m_step);
    for (std::size_t k = 0; k < n; ++k) {
        const double signed_k = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
        const double nu = signed_k * dnu;
        buf[k] *= std::exp(-0.5 * nu * nu * sigma * sigma) / static_cast<double>(n);
    }
    dft(buf, +1);
    EnergyDistribution out = dist;
    for (std::size_t j = 0; j < n; ++j) out.density[j] = buf[j].real();
    if (dist.kind == DistributionKind::quantum) out.kind = DistributionKind::measured_quantum;
    if (dist.kind == DistributionKind::classical) out.kind = DistributionKind::measured_classical;
    InversionOptions checks;
    checks.lower_guard = 0;
    checks.upper_guard = 0;
    finalize_density(out, checks);
    return out;
}

double shannon_entropy(const EnergyDistribution& dist) {
    double h = 0.0;
    for (double p : dist.density)
        if (p > 0.0) h -= p * std::log2(p);
    return h * dist.m_step;
}

double mutual_information(const EnergyDistribution& p1, const EnergyDistribution& p2) {
    if (!(p1.m_step > 0.0) || std::abs(p1.m_step - p2.m_step) > 1e-12 * p1.m_step)
        throw GridMismatchError("distributions use different m steps");
    const double offset = (p2.m_min - p1.m_min) / p1.m_step;
    const double whole = std::round(offset);
    if (std::abs(offset - whole) > 1e-6) throw GridMismatchError("grids are not offset by whole cells");
    const long shift = static_cast<long>(whole);
    const long lo = std::min(0L, shift);
    const long hi = std::max(static_cast<long>(p1.size()), shift + static_cast<long>(p2.size()));
    EnergyDistribution mix;
    mix.m_step = p1.m_step;
    mix.m_min = p1.m_min + lo * p1.m_step;
    mix.density.assign(static_cast<std::size_t>(hi - lo), 0.0);
    for (std::size_t i = 0; i < p1.size(); ++i) mix.density[static_cast<long>(i) - lo] += 0.5 * p1.density[i];
    for (std::size_t i = 0; i < p2.size(); ++i) mix.density[static_cast<long>(i) + shift - lo] += 0.5 * p2.density[i];
    return shannon_entropy(mix) - 0.5 * (shannon_entropy(p1) + shannon_entropy(p2));
}

std::vector<double> local_maxima(const EnergyDistribution& dist, double rel_prominence) {
    const auto& p = dist.density;
    const std::size_t n = p.size();
    std::vector<double> out;
    if (n < 3) return out;
    const double cut = rel_prominence * *std::max_element(p.begin(), p.end());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(p[i] > p[i - 1] && p[i] >= p[i + 1])) continue;
        double left = p[i];
        for (std::size_t j = i; j-- > 0;) {
            if (p[j] > p[i]) break;
            left = std::min(left, p[j]);
        }
        double right = p[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (p[j] > p[i]) break;
            right = std::min(right, p[j]);
        }
        if (p[i] - std::max(left, right) > cut) out.push_back(dist.m(i));
    }
    return out;
}

namespace {

// Variance of m from a central difference of log P~ at small lambda.
double variance_from_gen_fn(GeneratingSamples (*gen)(const std::vector<double>&, double, const BathParams&),
                            const BathParams& bath, double t, double scale) {
    const double h = 1e-3 / scale;
    const auto s = gen({-h, 0.0, h}, t, bath);
    const double v = -(std::log(s.values[0]) + std::log(s.values[2])).real() / (h * h);
    return std::max(v, 0.0);
}

double classical_mean(const BathParams& bath, double t) {
    const double tb = thermal_energy_quanta(bath.n_eq), ti = thermal_energy_quanta(bath.n_init);
    const double relax = bath.gamma == 0.0 ? t : -std::expm1(-bath.gamma * t) / bath.gamma;
    return tb * t + (ti - tb) * relax - t / 2.0;
}

}  // namespace

MeasuredPair measured_distributions(const BathParams& bath, const MeasurementNoise& noise, double t_avg) {
    bath.validate();
    noise.validate();
    if (!(t_avg > 0.0)) throw InvalidArgument("t_avg must be positive");
    const double mu_q = mean_integrated_occupation(bath, t_avg);
    const double mu_cl = classical_mean(bath, t_avg);
    const double shift = mu_cl - mu_q;
    const double scale = std::abs(mu_q) + t_avg * (1.0 + bath.n_init);
    const double noise_var = noise.s_nn * t_avg;
    const double sigma_n = std::sqrt(noise_var);
    const double sd = std::sqrt(std::max(variance_from_gen_fn(gen_fn_quantum, bath, t_avg, scale),
                                         variance_from_gen_fn(gen_fn_classical, bath, t_avg, scale)) +
                                noise_var);
    // exp(-lambda_max^2 sigma_n^2 / 2) = 1e-10 at the grid edge
    const double dm_max = kPi * sigma_n / std::sqrt(2.0 * std::log(1e10));
    const double lower = std::min(-t_avg / 2.0, shift) - 12.0 * sigma_n;
    double upper = mu_cl + 30.0 * sd;

    for (int attempt = 0; attempt < 4; ++attempt, upper = lower + 2.0 * (upper - lower)) {
        const double width = upper - lower;
        std::size_t n = std::size_t{1} << 16;
        while (width / static_cast<double>(n) > dm_max) {
            n <<= 1;
            if (n > (std::size_t{1} << 22))
                throw GridResolutionError("m window needs more than 2^22 cells at this noise level");
        }
        const auto lambda = conjugate_lambda_grid(width / static_cast<double>(n), n);
        InversionOptions opt;
        opt.m_min = lower;
        // below the support only the noise tail can appear
        opt.lower_guard = static_cast<std::size_t>(6.0 * sigma_n / (width / static_cast<double>(n)));
        try {
            MeasuredPair pair;
            auto q = gen_fn_quantum(lambda, t_avg, bath);
            add_measurement_noise(q, noise);
            translate(q, shift);
            pair.quantum = invert_gen_fn(q, opt);
            auto c = gen_fn_classical(lambda, t_avg, bath);
            add_measurement_noise(c, noise);
            pair.classical = invert_gen_fn(c, opt);
            pair.mean_shift = shift;
            return pair;
        } catch (const AliasingError&) {
            if (attempt == 3) throw;
        }
    }
    throw AliasingError("m window could not be widened enough");
}

DistinguishabilityReport compare_quantum_classical(const BathParams& bath, const MeasurementNoise& noise,
                                                   double t_avg) {
    const auto pair = measured_distributions(bath, noise, t_avg);
    DistinguishabilityReport r;
    r.s_nn = noise.s_nn;
    r.t_avg = t_avg;
    r.R = figure_of_merit_R(bath, noise);
    r.h_q_bits = shannon_entropy(pair.quantum);
    r.h_cl_bits = shannon_entropy(pair.classical);
    r.info_bits = mutual_information(pair.quantum, pair.classical);
    r.mean_shift = pair.mean_shift;
    return r;
}

AveragingOptimum optimize_averaging_time(const BathParams& bath, const MeasurementNoise& noise) {
    const double tau = bath.tau();
    const double lo = std::log(1e-3 * tau), hi = std::log(1e2 * tau);
    const std::size_t samples = 31;
    std::vector<double> info(samples, -1.0);
    auto at = [&](double log_t) { return compare_quantum_classical(bath, noise, std::exp(log_t)).info_bits; };
    auto node = [&](std::size_t i) { return lo + (hi - lo) * static_cast<double>(i) / (samples - 1); };
    parallel_for(samples, [&](std::size_t i) {
        try {
            info[i] = at(node(i));
        } catch (const NumericError&) {
            info[i] = -1.0;
        }
    });
    const std::size_t best = static_cast<std::size_t>(std::max_element(info.begin(), info.end()) - info.begin());
    if (info[best] < 0.0) throw ConvergenceError("no averaging time in the search range could be evaluated");

    AveragingOptimum r;
    r.t_opt = std::exp(node(best));
    r.info_bits = info[best];
    r.at_boundary = best == 0 || best == samples - 1;
    auto probe = [&](double log_t) {
        const double v = at(log_t);
        if (v > r.info_bits) {
            r.info_bits = v;
            r.t_opt = std::exp(log_t);
        }
        return v;
    };
    double a = node(best == 0 ? 0 : best - 1), b = node(std::min(best + 1, samples - 1));
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = probe(c), fd = probe(d);
    while (b - a > std::log(1.01)) {
        if (fc > fd) {
            b = d; d = c; fd = fc; c = b - g * (b - a); fc = probe(c);
        } else {
            a = c; c = d; fc = fd; d = a + g * (b - a); fd = probe(d);
        }
    }
    return r;
}

}  // namespace mim::qnd
