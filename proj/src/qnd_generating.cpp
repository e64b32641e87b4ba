#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mim/constants.hpp"
#include "mim/errors.hpp"
#include "mim/qnd_stats.hpp"

namespace mim::qnd {

namespace {

const complex kI{0.0, 1.0};

// Fills samples.alpha with a continuous square root of alpha_sq(lambda),
// starting from -i gamma at lambda = 0 and walking outward on both sides.
// Between nodes the root is continued in substeps small enough that the
// nearest of the two candidates is unambiguous.
template <class AlphaSquared>
void track_branch(GeneratingSamples& s, double gamma, AlphaSquared alpha_sq) {
    const std::size_t n = s.lambda.size();
    s.alpha.assign(n, complex());
    if (n == 0) return;
    auto continue_to = [&](double from, complex prev, double target) {
        double h = target - from;
        while (from != target) {
            const double next = std::abs(target - from) <= std::abs(h) ? target : from + h;
            const complex root = std::sqrt(alpha_sq(next));
            const double keep = std::abs(root - prev), flip = std::abs(root + prev);
            if (std::min(keep, flip) > 0.25 * std::max(keep, flip)) {
                h *= 0.5;
                // alpha turns on the scale gamma near lambda = 0
                if (std::abs(h) <= 1e-13 * std::max(std::abs(from), gamma)) {
                    char where[32];
                    std::snprintf(where, sizeof where, "%.6g", from);
                    throw BranchDiscontinuityError(std::string("square-root branch cannot be continued near lambda = ") +
                                                   where);
                }
                continue;
            }
            prev = keep <= flip ? root : -root;
            from = next;
            h *= 2.0;
        }
        return prev;
    };
    std::size_t origin = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(s.lambda[i]) < std::abs(s.lambda[origin])) origin = i;
    s.alpha[origin] = continue_to(0.0, complex(0.0, -gamma), s.lambda[origin]);
    for (std::size_t i = origin + 1; i < n; ++i) s.alpha[i] = continue_to(s.lambda[i - 1], s.alpha[i - 1], s.lambda[i]);
    for (std::size_t i = origin; i-- > 0;) s.alpha[i] = continue_to(s.lambda[i + 1], s.alpha[i + 1], s.lambda[i]);
}

void check_grid(const std::vector<double>& lambda, double t) {
    if (!(t > 0.0)) throw InvalidArgument("averaging time must be positive");
    for (double l : lambda)
        if (!std::isfinite(l)) throw InvalidArgument("lambda grid must be finite");
    for (std::size_t i = 1; i < lambda.size(); ++i)
        if (!(lambda[i] > lambda[i - 1])) throw InvalidArgument("lambda grid must be increasing");
}

}  // namespace

double bose_einstein(double omega_m, double temperature) {
    if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
    const double x = kHbar * omega_m / (kBoltzmann * temperature);
    if (x > 700.0) return 0.0;
    return 1.0 / std::expm1(x);
}

double thermal_energy_quanta(double occupation) {
    if (!(occupation >= 0.0)) throw InvalidArgument("occupation must be >= 0");
    if (occupation == 0.0) return 0.0;
    return 1.0 / std::log1p(1.0 / occupation);
}

double fock_decay_rate(double n, double gamma, double n_eq) {
    if (!(n >= 0.0)) throw InvalidArgument("Fock index must be >= 0");
    return gamma * (n_eq + n * (2.0 * n_eq + 1.0));
}

void BathParams::validate() const {
    if (!(omega_m > 0.0)) throw InvalidArgument("omega_m must be positive");
    if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
    if (!(n_eq >= 0.0) || !std::isfinite(n_eq)) throw InvalidArgument("n_eq must be >= 0");
    if (!(n_init >= 0.0) || !std::isfinite(n_init)) throw InvalidArgument("n_init must be >= 0");
}

double BathParams::tau() const {
    if (!(gamma > 0.0) || !(n_eq > 0.0)) throw DomainError("tau = 1/(gamma n_eq) requires gamma, n_eq > 0");
    return 1.0 / (gamma * n_eq);
}

BathParams BathParams::from_temperatures(double omega_m, double gamma, double t_bath, double t_init) {
    if (t_init < 0.0) throw InvalidArgument("initial temperature must be >= 0");
    BathParams b;
    b.omega_m = omega_m;
    b.gamma = gamma;
    b.n_eq = bose_einstein(omega_m, t_bath);
    b.n_init = t_init > 0.0 ? bose_einstein(omega_m, t_init) : 0.0;
    b.validate();
    return b;
}

void MeasurementNoise::validate() const {
    if (!(s_nn > 0.0) || !std::isfinite(s_nn)) throw InvalidArgument("S_nn must be positive");
}

double shot_noise_budget(double finesse, double power_in, double wavelength, double r_c, double x_m) {
    if (!(finesse > 0.0) || !(power_in > 0.0) || !(wavelength > 0.0) || !(x_m > 0.0))
        throw InvalidArgument("shot-noise budget inputs must be positive");
    return kHbar * kSpeedOfLight * wavelength * wavelength * wavelength * (1.0 - r_c) /
           (4096.0 * kPi * finesse * finesse * power_in * std::pow(x_m, 4));
}

double snr_gaussian(double t_avg, double s_nn) {
    if (!(t_avg > 0.0) || !(s_nn > 0.0)) throw InvalidArgument("t_avg and S_nn must be positive");
    return t_avg / (4.0 * s_nn);
}

double figure_of_merit_R(const BathParams& bath, const MeasurementNoise& noise) {
    noise.validate();
    return bath.tau() / (4.0 * noise.s_nn);
}

std::string to_string(DistributionKind kind) {
    switch (kind) {
        case DistributionKind::quantum: return "quantum";
        case DistributionKind::classical: return "classical";
        case DistributionKind::measured_quantum: return "measured-quantum";
        case DistributionKind::measured_classical: return "measured-classical";
    }
    return "unknown";
}

std::vector<double> conjugate_lambda_grid(double m_step, std::size_t n) {
    if (!(m_step > 0.0) || n < 2 || n % 2 != 0) throw InvalidArgument("need m_step > 0 and an even grid size");
    const double dl = 2.0 * kPi / (static_cast<double>(n) * m_step);
    std::vector<double> lambda(n);
    for (std::size_t k = 0; k < n; ++k)
        lambda[k] = (static_cast<double>(k) - static_cast<double>(n / 2)) * dl;
    return lambda;
}

GeneratingSamples gen_fn_quantum(const std::vector<double>& lambda, double t, const BathParams& bath) {
    bath.validate();
    check_grid(lambda, t);
    GeneratingSamples s;
    s.lambda = lambda;
    s.t = t;
    s.kind = DistributionKind::quantum;
    s.values.resize(lambda.size());
    const double g = bath.gamma;

    if (g == 0.0) {
        // number conserved: geometric mixture of m = n t
        const double p = bath.n_init / (1.0 + bath.n_init);
        s.alpha = std::vector<complex>(lambda.begin(), lambda.end());
        for (std::size_t i = 0; i < lambda.size(); ++i)
            s.values[i] = (1.0 - p) / (1.0 - p * std::exp(-kI * lambda[i] * t));
        return s;
    }

    // alpha^2 - lambda^2, free of cancellation
    auto excess = [&](double l) { return complex(-g * g, -2.0 * l * g * (1.0 + 2.0 * bath.n_eq)); };
    track_branch(s, g, [&](double l) { return l * l + excess(l); });
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        const double l = lambda[i];
        if (l == 0.0) {
            s.values[i] = 1.0;
            continue;
        }
        const complex a = s.alpha[i];
        const complex d = excess(l) / (a + l);  // alpha - lambda
        const complex M = (2.0 * l * bath.n_init - (d + kI * g)) / (2.0 * l * bath.n_init + d + 2.0 * l - kI * g);
        s.values[i] = std::exp(g * t / 2.0 - kI * d * (t / 2.0)) * (1.0 - M) / (1.0 - M * std::exp(-kI * a * t));
    }
    return s;
}

GeneratingSamples gen_fn_classical(const std::vector<double>& lambda, double t, const BathParams& bath) {
    bath.validate();
    check_grid(lambda, t);
    GeneratingSamples s;
    s.lambda = lambda;
    s.t = t;
    s.kind = DistributionKind::classical;
    s.values.resize(lambda.size());
    const double g = bath.gamma;
    // energies in units of hbar omega_M, so chi k_B T = theta lambda
    const double theta_bath = thermal_energy_quanta(bath.n_eq);
    const double theta_init = thermal_energy_quanta(bath.n_init);

    if (g == 0.0) {
        // Boltzmann law of the initial energy held for the whole interval
        s.alpha.assign(lambda.size(), complex());
        for (std::size_t i = 0; i < lambda.size(); ++i)
            s.values[i] = std::exp(kI * lambda[i] * (t / 2.0)) / (1.0 + kI * theta_init * lambda[i] * t);
        return s;
    }

    track_branch(s, g, [&](double l) { return complex(-g * g, -4.0 * theta_bath * l * g); });
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        const double l = lambda[i];
        if (l == 0.0) {
            s.values[i] = 1.0;
            continue;
        }
        const complex a = s.alpha[i];
        const complex M = (2.0 * theta_init * l - (a + kI * g)) / (2.0 * theta_init * l + a - kI * g);
        s.values[i] = std::exp(g * t / 2.0 - kI * (a - l) * (t / 2.0)) * (1.0 - M) /
                      (1.0 - M * std::exp(-kI * a * t));
    }
    return s;
}

void add_measurement_noise(GeneratingSamples& samples, const MeasurementNoise& noise) {
    noise.validate();
    const double var = noise.s_nn * samples.t;
    for (std::size_t i = 0; i < samples.lambda.size(); ++i) {
        const double l = samples.lambda[i];
        samples.values[i] *= std::exp(-0.5 * l * l * var);
    }
    samples.noise_variance += var;
    if (samples.kind == DistributionKind::quantum) samples.kind = DistributionKind::measured_quantum;
    if (samples.kind == DistributionKind::classical) samples.kind = DistributionKind::measured_classical;
}

void translate(GeneratingSamples& samples, double shift) {
    for (std::size_t i = 0; i < samples.lambda.size(); ++i)
        samples.values[i] *= std::exp(-kI * samples.lambda[i] * shift);
    samples.shift += shift;
}

double mean_integrated_occupation(const BathParams& bath, double t) {
    bath.validate();
    if (!(t >= 0.0)) throw InvalidArgument("t must be >= 0");
    if (bath.gamma == 0.0) return bath.n_init * t;
    return bath.n_eq * t + (bath.n_init - bath.n_eq) * (-std::expm1(-bath.gamma * t) / bath.gamma);
}

complex master_equation_oracle(const BathParams& bath, double t, double lambda, std::size_t levels) {
    namespace ode = boost::numeric::odeint;
    bath.validate();
    if (!(t >= 0.0)) throw InvalidArgument("t must be >= 0");
    if (levels < 2) throw InvalidArgument("need at least two levels");
    using State = std::vector<double>;  // interleaved real/imag p_n
    const std::size_t n = levels;
    State p(2 * n, 0.0);
    const double q = bath.n_init / (1.0 + bath.n_init);
    double w = 1.0 - q;
    for (std::size_t k = 0; k < n; ++k, w *= q) p[2 * k] = w;

    auto rhs = [&](const State& x, State& dx, double) {
        for (std::size_t k = 0; k < n; ++k) {
            const double nk = static_cast<double>(k);
            const complex pk(x[2 * k], x[2 * k + 1]);
            complex d = -(bath.rate_up(nk) + bath.rate_down(nk)) * pk - kI * lambda * nk * pk;
            if (k > 0) d += bath.rate_up(nk - 1.0) * complex(x[2 * k - 2], x[2 * k - 1]);
            if (k + 1 < n) d += bath.rate_down(nk + 1.0) * complex(x[2 * k + 2], x[2 * k + 3]);
            dx[2 * k] = d.real();
            dx[2 * k + 1] = d.imag();
        }
    };
    if (t > 0.0)
        ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-15, 1e-13), rhs, p, 0.0,
                                t, t / 1000.0);
    const double top = std::hypot(p[2 * n - 2], p[2 * n - 1]);
    if (top > 1e-12)
        throw TruncationError("occupancy of the top retained level is " + std::to_string(top * 1e12) + "e-12" +
                              "; increase the truncation");
    complex sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += complex(p[2 * k], p[2 * k + 1]);
    return sum;
}

}  // namespace mim::qnd
