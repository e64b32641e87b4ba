#ifndef MIM_LINEARIZED_DYNAMICS_HPP
#define MIM_LINEARIZED_DYNAMICS_HPP

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mim::dynamics {

using complex = std::complex<double>;

/// Single-mode optomechanical system. Frequencies in rad/s, positions in m.
struct StandardParams {
    double detuning = 0.0;    ///< Delta = omega_L - omega_cav(x = 0)
    double slope = 0.0;       ///< omega' = d omega_cav / dx
    double kappa = 1.0;       ///< intensity ringdown rate
    double omega_m = 1.0;
    double gamma_m = 0.0;
    double pressure = 0.0;    ///< radiation-pressure constant P (rad^2/s^2)
    double x0 = 0.0;          ///< mechanical equilibrium without light

    void validate() const;
};

struct StandardSteadyState {
    double x = 0.0;
    complex alpha;
    bool stable = true;
    double stiffness = 0.0;  ///< omega_m^2 + Re Sigma(0)
};

/// Force-balance solutions ordered by x, each classified by static stiffness.
std::vector<StandardSteadyState> steady_state_standard(const StandardParams& p);

/// Light amplitude for a given membrane position, unity on resonance.
complex standard_alpha(const StandardParams& p, double x);

complex light_susceptibility_standard(const StandardParams& p, const StandardSteadyState& ss,
                                      double omega);

struct SelfEnergySample {
    double omega = 0.0;
    complex sigma;
    double gamma_opt = 0.0;     ///< Im Sigma(omega_m) / omega_m
    double spring_shift = 0.0;  ///< Re Sigma(omega_m) / (2 omega_m)
};

SelfEnergySample self_energy_standard(const StandardParams& p, const StandardSteadyState& ss,
                                      double omega);

/// Stokes/anti-Stokes Lorentzian difference.
double gamma_opt_closed_form(const StandardParams& p, const StandardSteadyState& ss);

/// Largest |Gamma_opt| of the single-mode setup over detuning, with the light
/// amplitude following the detuning. Used as the unit of cooling maps.
double standard_saturation(double omega_m, double kappa, double slope, double pressure);

struct TwoModeParams {
    double coupling = 0.0;  ///< tunnel coupling g (rad/s), real and >= 0
    double slope = 0.0;     ///< omega' (rad/s per m)
    double kappa_l = 1.0;
    double kappa_r = 1.0;
    double detuning = 0.0;  ///< relative to the uncoupled degeneracy
    double omega_m = 1.0;
    double gamma_m = 0.0;
    double pressure = 0.0;

    void validate() const;

    /// g = (c/L) sqrt(2 (1 - |r_d|)), omega' = -omega_L / (L/2).
    static std::pair<double, double> device_coupling(double abs_r, double length,
                                                     double laser_omega);
};

struct TwoModeState {
    double x = 0.0;
    complex alpha_l;
    complex alpha_r;
};

TwoModeState two_mode_state(const TwoModeParams& p, double x);
std::pair<double, double> eigenfrequencies_two_mode(const TwoModeParams& p, double x);
std::array<complex, 2> susceptibility_vector_two_mode(const TwoModeParams& p,
                                                      const TwoModeState& state, double omega);
SelfEnergySample self_energy_two_mode(const TwoModeParams& p, const TwoModeState& state,
                                      double omega);

/// Dimensionless map setup: kappa = 1, omega' = -1, P = 1, so x_scaled =
/// x |omega'| / kappa and delta_scaled = Delta / kappa. Values are Gamma_opt
/// divided by the single-mode saturation at the same omega_m / kappa.
struct MapSpec {
    double omega_m_over_kappa = 1.0;
    double g_over_kappa = 2.0;
    double kappa_r_over_kappa_l = 1.0;
    std::vector<double> x_axis;
    std::vector<double> delta_axis;
    std::optional<double> gamma_m_over_kappa;  ///< enables the self-oscillation flag
};

struct CoolingMap {
    double omega_m_over_kappa = 0.0;
    double g_over_kappa = 0.0;
    double kappa_r_over_kappa_l = 1.0;
    double saturation = 0.0;  ///< single-mode saturation in units of kappa
    std::vector<double> x_axis;
    std::vector<double> delta_axis;
    std::vector<double> values;          ///< row-major [ix * delta_axis.size() + id]
    std::vector<bool> self_oscillating;  ///< empty unless gamma_m was supplied
    std::vector<std::string> node_errors;

    double at(std::size_t ix, std::size_t id) const { return values[ix * delta_axis.size() + id]; }
};

std::vector<double> linear_axis(double lo, double hi, std::size_t n);

CoolingMap cooling_map(const MapSpec& spec);

/// Normalized Gamma_opt along Delta at fixed scaled position.
std::vector<double> cooling_cross_section(const MapSpec& spec, double x_scaled);

/// Largest normalized cooling rate over Delta at a scaled position.
double max_cooling(double omega_m_over_kappa, double g_over_kappa, double x_scaled);

/// max(|map(x,D) + map(-x,-D)|) / max|map|; requires axes symmetric about 0.
double antisymmetry_defect(const CoolingMap& map);

}  // namespace mim::dynamics

#endif
