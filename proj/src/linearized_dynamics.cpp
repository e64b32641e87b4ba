#include "mim/linearized_dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "mim/constants.hpp"
#include "mim/errors.hpp"
#include "mim/parallel.hpp"

namespace mim::dynamics {

namespace {

const complex kI{0.0, 1.0};

// Real roots of u^3 + a u^2 + b u + d, ascending, Newton-polished.
std::vector<double> real_cubic_roots(double a, double b, double d) {
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    const double shift = -a / 3.0;
    std::vector<double> roots;
    const double disc = 4.0 * p * p * p + 27.0 * q * q;
    if (p < 0.0 && disc < 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos(theta - 2.0 * kPi * k / 3.0) + shift);
    } else {
        const double s = std::sqrt(std::max(0.0, q * q / 4.0 + p * p * p / 27.0));
        roots.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s) + shift);
    }
    for (double& u : roots) {
        for (int it = 0; it < 4; ++it) {
            const double f = ((u + a) * u + b) * u + d;
            const double df = (3.0 * u + 2.0 * a) * u + b;
            if (df == 0.0) break;
            u -= f / df;
        }
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> unique;
    for (double u : roots) {
        const double scale = std::max({1.0, std::abs(u), std::abs(a), std::sqrt(std::abs(b))});
        if (unique.empty() || std::abs(u - unique.back()) > 1e-9 * scale) unique.push_back(u);
    }
    return unique;
}

Eigen::Matrix2cd drift_matrix(const TwoModeParams& p, double x) {
    Eigen::Matrix2cd M;
    M(0, 0) = kI * (p.detuning - p.slope * x) - p.kappa_l / 2.0;
    M(0, 1) = -kI * p.coupling;
    M(1, 0) = -kI * p.coupling;
    M(1, 1) = kI * (p.detuning + p.slope * x) - p.kappa_r / 2.0;
    return M;
}

complex two_by_two_solve_first(const Eigen::Matrix2cd& A, const Eigen::Vector2cd& b, complex* second) {
    const complex det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    if (det == complex(0.0, 0.0)) throw SingularSystemError("singular 2x2 drift matrix");
    *second = (A(0, 0) * b(1) - A(1, 0) * b(0)) / det;
    return (A(1, 1) * b(0) - A(0, 1) * b(1)) / det;
}

double standard_gamma_at(double u, double omega_m, double kappa, double slope, double pressure) {
    const double h = kappa / 2.0;
    const double occupancy = h * h / (h * h + u * u);
    const double lorentz = 1.0 / ((u - omega_m) * (u - omega_m) + h * h) -
                           1.0 / ((u + omega_m) * (u + omega_m) + h * h);
    return slope * pressure * occupancy * kappa / (2.0 * omega_m) * lorentz;
}

// Maximum of f over [lo, hi] from a grid scan followed by Brent refinement.
template <class F>
double grid_then_brent_max(F f, double lo, double hi, std::size_t samples) {
    double best_x = lo, best = -std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = lo + step * static_cast<double>(i);
        const double v = f(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    auto neg = [&](double x) { return -f(x); };
    const auto r = boost::math::tools::brent_find_minima(neg, std::max(lo, best_x - step),
                                                         std::min(hi, best_x + step), 52);
    return std::max(best, -r.second);
}

}  // namespace

void StandardParams::validate() const {
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
    if (!(omega_m > 0.0)) throw InvalidArgument("omega_m must be positive");
    if (!(gamma_m >= 0.0)) throw InvalidArgument("gamma_m must be >= 0");
}

complex standard_alpha(const StandardParams& p, double x) {
    const double h = p.kappa / 2.0;
    return h / (h - kI * (p.detuning - p.slope * x));
}

std::vector<StandardSteadyState> steady_state_standard(const StandardParams& p) {
    p.validate();
    const double h = p.kappa / 2.0;
    const double w2 = p.omega_m * p.omega_m;
    std::vector<double> positions;
    if (p.slope == 0.0) {
        positions.push_back(p.x0 + p.pressure * std::norm(standard_alpha(p, p.x0)) / w2);
    } else {
        // u = Delta - omega' x:  (c - u)(h^2 + u^2) = omega' P h^2 / omega_m^2
        const double c = p.detuning - p.slope * p.x0;
        const double A = p.slope * p.pressure * h * h / w2;
        for (double u : real_cubic_roots(-c, h * h, A - c * h * h))
            positions.push_back(p.x0 + p.pressure * (h * h / (h * h + u * u)) / w2);
    }
    std::sort(positions.begin(), positions.end());
    std::vector<StandardSteadyState> out;
    for (double x : positions) {
        StandardSteadyState s;
        s.x = x;
        s.alpha = standard_alpha(p, x);
        s.stiffness = w2 + self_energy_standard(p, s, 0.0).sigma.real();
        s.stable = s.stiffness > 0.0;
        out.push_back(s);
    }
    return out;
}

complex light_susceptibility_standard(const StandardParams& p, const StandardSteadyState& ss,
                                      double omega) {
    const complex den = p.detuning - p.slope * ss.x - omega + kI * (p.kappa / 2.0);
    if (den == complex(0.0, 0.0)) throw SingularSystemError("light susceptibility denominator vanishes");
    return ss.alpha * p.slope / den;
}

SelfEnergySample self_energy_standard(const StandardParams& p, const StandardSteadyState& ss,
                                      double omega) {
    auto sigma = [&](double w) {
        const complex chi = light_susceptibility_standard(p, ss, w);
        const complex chi_neg = light_susceptibility_standard(p, ss, -w);
        return -p.pressure * (std::conj(ss.alpha) * chi + ss.alpha * std::conj(chi_neg));
    };
    SelfEnergySample s;
    s.omega = omega;
    s.sigma = sigma(omega);
    const complex at_m = omega == p.omega_m ? s.sigma : sigma(p.omega_m);
    s.gamma_opt = at_m.imag() / p.omega_m;
    s.spring_shift = at_m.real() / (2.0 * p.omega_m);
    return s;
}

double gamma_opt_closed_form(const StandardParams& p, const StandardSteadyState& ss) {
    const double u = p.detuning - p.slope * ss.x;
    const double h = p.kappa / 2.0;
    const double w = p.omega_m;
    const double stokes = 1.0 / ((u - w) * (u - w) + h * h);
    const double anti_stokes = 1.0 / ((u + w) * (u + w) + h * h);
    return p.slope * p.pressure * std::norm(ss.alpha) * p.kappa / (2.0 * w) * (stokes - anti_stokes);
}

double standard_saturation(double omega_m, double kappa, double slope, double pressure) {
    if (!(omega_m > 0.0) || !(kappa > 0.0)) throw InvalidArgument("omega_m and kappa must be positive");
    auto f = [&](double u) { return std::abs(standard_gamma_at(u, omega_m, kappa, slope, pressure)); };
    const double span = omega_m + 10.0 * kappa;
    return grid_then_brent_max(f, -span, 0.0, 4001);
}

void TwoModeParams::validate() const {
    if (!(coupling >= 0.0)) throw InvalidArgument("tunnel coupling g must be >= 0");
    if (!(kappa_l >= 0.0) || !(kappa_r >= 0.0)) throw InvalidArgument("kappa_L, kappa_R must be >= 0");
    if (!(omega_m > 0.0)) throw InvalidArgument("omega_m must be positive");
    if (!(gamma_m >= 0.0)) throw InvalidArgument("gamma_m must be >= 0");
}

std::pair<double, double> TwoModeParams::device_coupling(double abs_r, double length,
                                                         double laser_omega) {
    if (!(abs_r >= 0.0 && abs_r <= 1.0)) throw InvalidArgument("|r_d| must lie in [0, 1]");
    if (!(length > 0.0)) throw InvalidArgument("length must be positive");
    const double g = kSpeedOfLight / length * std::sqrt(2.0 * (1.0 - abs_r));
    return {g, -laser_omega / (length / 2.0)};
}

TwoModeState two_mode_state(const TwoModeParams& p, double x) {
    p.validate();
    if (p.kappa_l == 0.0 && p.kappa_r == 0.0)
        throw SingularSystemError("two-mode steady state undefined for kappa_L = kappa_R = 0");
    const Eigen::Matrix2cd M = drift_matrix(p, x);
    TwoModeState s;
    s.x = x;
    complex second;
    s.alpha_l = two_by_two_solve_first(M, Eigen::Vector2cd(-p.kappa_l / 2.0, 0.0), &second);
    s.alpha_r = second;
    return s;
}

std::pair<double, double> eigenfrequencies_two_mode(const TwoModeParams& p, double x) {
    const double w = std::hypot(p.coupling, p.slope * x);
    return {w, -w};
}

std::array<complex, 2> susceptibility_vector_two_mode(const TwoModeParams& p,
                                                      const TwoModeState& state, double omega) {
    const Eigen::Matrix2cd A = kI * omega * Eigen::Matrix2cd::Identity() - drift_matrix(p, state.x);
    const Eigen::Vector2cd rhs(kI * state.alpha_l, -kI * state.alpha_r);
    complex second;
    const complex first = two_by_two_solve_first(A, rhs, &second);
    return {-p.slope * first, -p.slope * second};
}

SelfEnergySample self_energy_two_mode(const TwoModeParams& p, const TwoModeState& state,
                                      double omega) {
    auto sigma = [&](double w) {
        const auto chi = susceptibility_vector_two_mode(p, state, w);
        const auto chi_neg = susceptibility_vector_two_mode(p, state, -w);
        const complex left = std::conj(state.alpha_l) * chi[0] + state.alpha_l * std::conj(chi_neg[0]);
        const complex right = std::conj(state.alpha_r) * chi[1] + state.alpha_r * std::conj(chi_neg[1]);
        return -p.pressure * left + p.pressure * right;
    };
    SelfEnergySample s;
    s.omega = omega;
    s.sigma = sigma(omega);
    const complex at_m = omega == p.omega_m ? s.sigma : sigma(p.omega_m);
    s.gamma_opt = at_m.imag() / p.omega_m;
    s.spring_shift = at_m.real() / (2.0 * p.omega_m);
    return s;
}

std::vector<double> linear_axis(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> axis(n);
    for (std::size_t i = 0; i < n; ++i)
        axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (lo == -hi) {
        // exact mirror image so that inversion checks compare identical nodes
        for (std::size_t i = 0; i < n / 2; ++i) axis[n - 1 - i] = -axis[i];
        if (n % 2 == 1) axis[n / 2] = 0.0;
    }
    return axis;
}

namespace {

TwoModeParams scaled_params(const MapSpec& spec, double delta) {
    TwoModeParams p;
    p.coupling = spec.g_over_kappa;
    p.slope = -1.0;
    p.kappa_l = 1.0;
    p.kappa_r = spec.kappa_r_over_kappa_l;
    p.detuning = delta;
    p.omega_m = spec.omega_m_over_kappa;
    p.gamma_m = spec.gamma_m_over_kappa.value_or(0.0);
    p.pressure = 1.0;
    return p;
}

double normalized_gamma(const MapSpec& spec, double saturation, double x, double delta) {
    const TwoModeParams p = scaled_params(spec, delta);
    const TwoModeState s = two_mode_state(p, x);
    return self_energy_two_mode(p, s, p.omega_m).gamma_opt / saturation;
}

}  // namespace

CoolingMap cooling_map(const MapSpec& spec) {
    if (spec.x_axis.empty() || spec.delta_axis.empty()) throw InvalidArgument("map axes must be non-empty");
    if (!(spec.omega_m_over_kappa > 0.0)) throw InvalidArgument("omega_m/kappa must be positive");
    if (!(spec.g_over_kappa >= 0.0)) throw InvalidArgument("g/kappa must be >= 0");
    CoolingMap map;
    map.omega_m_over_kappa = spec.omega_m_over_kappa;
    map.g_over_kappa = spec.g_over_kappa;
    map.kappa_r_over_kappa_l = spec.kappa_r_over_kappa_l;
    map.saturation = standard_saturation(spec.omega_m_over_kappa, 1.0, -1.0, 1.0);
    map.x_axis = spec.x_axis;
    map.delta_axis = spec.delta_axis;
    const std::size_t nx = spec.x_axis.size(), nd = spec.delta_axis.size();
    map.values.assign(nx * nd, std::numeric_limits<double>::quiet_NaN());
    map.node_errors.assign(nx * nd, std::string());
    parallel_for(nx, [&](std::size_t ix) {
        for (std::size_t id = 0; id < nd; ++id) {
            try {
                map.values[ix * nd + id] =
                    normalized_gamma(spec, map.saturation, spec.x_axis[ix], spec.delta_axis[id]);
            } catch (const Error& e) {
                map.node_errors[ix * nd + id] = e.what();
            }
        }
    });
    if (spec.gamma_m_over_kappa) {
        map.self_oscillating.assign(nx * nd, false);
        for (std::size_t i = 0; i < nx * nd; ++i)
            map.self_oscillating[i] = map.values[i] * map.saturation + *spec.gamma_m_over_kappa < 0.0;
    }
    return map;
}

std::vector<double> cooling_cross_section(const MapSpec& spec, double x_scaled) {
    const double saturation = standard_saturation(spec.omega_m_over_kappa, 1.0, -1.0, 1.0);
    std::vector<double> out;
    out.reserve(spec.delta_axis.size());
    for (double d : spec.delta_axis) out.push_back(normalized_gamma(spec, saturation, x_scaled, d));
    return out;
}

double max_cooling(double omega_m_over_kappa, double g_over_kappa, double x_scaled) {
    MapSpec spec;
    spec.omega_m_over_kappa = omega_m_over_kappa;
    spec.g_over_kappa = g_over_kappa;
    const double saturation = standard_saturation(omega_m_over_kappa, 1.0, -1.0, 1.0);
    const double span = std::abs(x_scaled) + g_over_kappa + omega_m_over_kappa + 10.0;
    auto f = [&](double d) { return normalized_gamma(spec, saturation, x_scaled, d); };
    const auto samples = static_cast<std::size_t>(std::ceil(2.0 * span / 0.01)) + 1;
    return grid_then_brent_max(f, -span, span, samples);
}

double antisymmetry_defect(const CoolingMap& map) {
    const std::size_t nx = map.x_axis.size(), nd = map.delta_axis.size();
    for (std::size_t i = 0; i < nx; ++i)
        if (std::abs(map.x_axis[i] + map.x_axis[nx - 1 - i]) > 1e-12 * (1.0 + std::abs(map.x_axis[i])))
            throw InvalidArgument("x axis is not symmetric about zero");
    for (std::size_t i = 0; i < nd; ++i)
        if (std::abs(map.delta_axis[i] + map.delta_axis[nd - 1 - i]) >
            1e-12 * (1.0 + std::abs(map.delta_axis[i])))
            throw InvalidArgument("detuning axis is not symmetric about zero");
    double worst = 0.0, scale = 0.0;
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t id = 0; id < nd; ++id) {
            worst = std::max(worst, std::abs(map.at(ix, id) + map.at(nx - 1 - ix, nd - 1 - id)));
            scale = std::max(scale, std::abs(map.at(ix, id)));
        }
    return scale > 0.0 ? worst / scale : 0.0;
}

}  // namespace mim::dynamics
