#ifndef MIM_QND_STATS_HPP
#define MIM_QND_STATS_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mim::qnd {

using complex = std::complex<double>;

/// (exp(hbar omega / k_B T) - 1)^-1; 0 once the exponent exceeds 700.
double bose_einstein(double omega_m, double temperature);

/// k_B T / (hbar omega) of the temperature whose Bose-Einstein occupation is
/// `occupation` (0 for 0).
double thermal_energy_quanta(double occupation);

/// Gamma_n = gamma [n_eq + n (2 n_eq + 1)].
double fock_decay_rate(double n, double gamma, double n_eq);

struct BathParams {
    double omega_m = 0.0;  ///< rad/s
    double gamma = 0.0;    ///< 1/s
    double n_eq = 0.0;
    double n_init = 0.0;

    void validate() const;
    /// Ground-state lifetime 1 / (gamma n_eq).
    double tau() const;
    double rate_up(double n) const { return gamma * n_eq * (n + 1.0); }
    double rate_down(double n) const { return gamma * (n_eq + 1.0) * n; }

    static BathParams from_temperatures(double omega_m, double gamma, double t_bath, double t_init);
};

struct MeasurementNoise {
    double s_nn = 0.0;  ///< two-sided white density, quanta^2 s

    void validate() const;
};

/// hbar c lambda^3 (1 - r_c) / (4096 pi F^2 P_in x_m^4).
double shot_noise_budget(double finesse, double power_in, double wavelength, double r_c, double x_m);
double snr_gaussian(double t_avg, double s_nn);
/// tau / (4 S_nn).
double figure_of_merit_R(const BathParams& bath, const MeasurementNoise& noise);

enum class DistributionKind { quantum, classical, measured_quantum, measured_classical };
std::string to_string(DistributionKind kind);

/// Generating function E[exp(-i lambda m)] of the time-integrated occupation
/// m = int_0^t n dt' on a lambda grid.
struct GeneratingSamples {
    std::vector<double> lambda;
    std::vector<complex> values;
    std::vector<complex> alpha;  ///< square-root branch actually used at each node
    double t = 0.0;
    DistributionKind kind = DistributionKind::quantum;
    double noise_variance = 0.0;  ///< Gaussian variance folded in, quanta^2 s^2
    double shift = 0.0;           ///< translation folded in
};

/// lambda_k = (k - n/2) 2 pi / (n m_step), k = 0..n-1; conjugate to an m grid
/// of n cells of width m_step.
std::vector<double> conjugate_lambda_grid(double m_step, std::size_t n);

/// Quantum oscillator started thermal at n_init, bath at n_eq. The square
/// root is continued from alpha(0) = -i gamma along the grid, outward from
/// lambda = 0 on either side.
GeneratingSamples gen_fn_quantum(const std::vector<double>& lambda, double t, const BathParams& bath);

/// Classical oscillator with the same bath and initial temperatures, mapped to
/// m via s = hbar omega (m + t / 2).
GeneratingSamples gen_fn_classical(const std::vector<double>& lambda, double t, const BathParams& bath);

/// Folds white detector noise into the samples: factor exp(-lambda^2 S_nn t / 2).
void add_measurement_noise(GeneratingSamples& samples, const MeasurementNoise& noise);

/// Translates the distribution by `shift` in m: factor exp(-i lambda shift).
void translate(GeneratingSamples& samples, double shift);

struct EnergyDistribution {
    double m_min = 0.0;
    double m_step = 0.0;
    std::vector<double> density;
    DistributionKind kind = DistributionKind::quantum;
    double t = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double shift = 0.0;

    std::size_t size() const { return density.size(); }
    double m(std::size_t i) const { return m_min + m_step * static_cast<double>(i); }
    double mass() const;
};

struct InversionOptions {
    double m_min = 0.0;
    /// Lattice mode: the samples cover exactly one period 2 pi / t of a
    /// generating function of masses on m = j t (gamma = 0). The output has
    /// one cell per lattice site and the decay check is skipped.
    bool lattice = false;
    /// Optional Gaussian smoothing of this standard deviation (quanta s).
    double resolution = 0.0;
    double edge_tolerance = 1e-8;        ///< |P~| at the grid edge
    double negativity_tolerance = 1e-8;  ///< relative to the peak density
    double tail_tolerance = 1e-6;        ///< mass allowed in the guard bands
    /// Cells at each end that must hold (almost) no mass; default n / 32.
    std::optional<std::size_t> lower_guard;
    std::optional<std::size_t> upper_guard;
};

/// Discrete Fourier inversion onto the conjugate m grid starting at m_min.
EnergyDistribution invert_gen_fn(const GeneratingSamples& samples, const InversionOptions& options);

/// Convolution with a zero-mean Gaussian of variance S_nn t_avg on the same
/// grid. Input mass within 5 noise widths of either edge is an aliasing error.
EnergyDistribution convolve_noise(const EnergyDistribution& dist, const MeasurementNoise& noise,
                                  double t_avg);

/// Differential entropy in bits, -sum p log2 p dm.
double shannon_entropy(const EnergyDistribution& dist);

/// H[(P1 + P2) / 2] - (H[P1] + H[P2]) / 2 in bits. Grids must share the step
/// and be offset by a whole number of cells.
double mutual_information(const EnergyDistribution& p1, const EnergyDistribution& p2);

/// Interior local maxima whose prominence on both sides exceeds
/// rel_prominence times the peak density.
std::vector<double> local_maxima(const EnergyDistribution& dist, double rel_prominence = 1e-3);

/// Analytic mean of m: int_0^t <n> with <n(t)> = n_eq (1 - e^{-gamma t}) + n_init e^{-gamma t}.
double mean_integrated_occupation(const BathParams& bath, double t);

struct MeasuredPair {
    EnergyDistribution quantum;    ///< shifted to the classical mean
    EnergyDistribution classical;
    double mean_shift = 0.0;
};

/// Measured quantum and classical distributions on a common grid sized from
/// their cumulants and the noise bandwidth.
MeasuredPair measured_distributions(const BathParams& bath, const MeasurementNoise& noise, double t_avg);

struct DistinguishabilityReport {
    double s_nn = 0.0;
    double t_avg = 0.0;
    double R = 0.0;
    double info_bits = 0.0;
    double h_q_bits = 0.0;
    double h_cl_bits = 0.0;
    double mean_shift = 0.0;
};

DistinguishabilityReport compare_quantum_classical(const BathParams& bath, const MeasurementNoise& noise,
                                                   double t_avg);

struct AveragingOptimum {
    double t_opt = 0.0;
    double info_bits = 0.0;
    bool at_boundary = false;
};

/// Maximizes I(t_avg) over [1e-3 tau, 1e2 tau]: log-spaced scan, then golden
/// section on log t to 1% in t.
AveragingOptimum optimize_averaging_time(const BathParams& bath, const MeasurementNoise& noise);

struct JumpTrace {
    std::vector<double> times;           ///< event times; times[0] = 0 is the start
    std::vector<std::uint32_t> occupations;
    std::uint64_t seed = 0;
    double duration = 0.0;
    BathParams bath;

    std::uint32_t occupation_at(double t) const;
};

struct JumpTraceOptions {
    std::optional<std::uint32_t> initial;  ///< otherwise drawn thermal at n_init
    std::size_t event_cap = 50'000'000;
};

/// Birth-death process with rate_up / rate_down and exponential waiting times.
JumpTrace simulate_jump_trace(const BathParams& bath, double duration, std::uint64_t seed,
                              const JumpTraceOptions& options = {});

struct AveragedTrace {
    double dt = 0.0;
    double kernel_sigma = 0.0;  ///< Gaussian width of the averaging kernel (s)
    std::vector<double> t;
    std::vector<double> n_avg;
};

/// n(t) plus discretized white noise of density S_nn, smoothed with a Gaussian
/// kernel normalized to unit sum whose squared sum equals dt / t_avg, so the
/// averaged noise variance is S_nn / t_avg. dt defaults to t_avg / 20.
AveragedTrace sliding_average_trace(const JumpTrace& trace, const MeasurementNoise& noise, double t_avg,
                                    std::uint64_t seed, std::optional<double> dt = std::nullopt);

/// Sum over n of the counting-field master equation solution, truncated at
/// `levels` Fock states and started thermal at n_init.
complex master_equation_oracle(const BathParams& bath, double t, double lambda, std::size_t levels);

}  // namespace mim::qnd

#endif
