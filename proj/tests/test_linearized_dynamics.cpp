#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "mim/errors.hpp"
#include "mim/linearized_dynamics.hpp"

using namespace mim::dynamics;
using cd = std::complex<double>;

namespace {

const cd I(0.0, 1.0);

// Integrates dy/dt = A y from y(0) = y0 together with the running transform
// int_0^T y(t) e^{-i omega t} dt, T long enough for the decay to finish.
std::vector<cd> impulse_transform(const std::vector<std::vector<cd>>& A, const std::vector<cd>& y0,
                                  double omega, double decay_rate) {
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    const std::size_t n = y0.size();
    State s(4 * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        s[2 * j] = y0[j].real();
        s[2 * j + 1] = y0[j].imag();
    }
    auto rhs = [&](const State& x, State& dx, double t) {
        const cd phase = std::exp(-I * omega * t);
        for (std::size_t r = 0; r < n; ++r) {
            cd acc = 0.0;
            for (std::size_t c = 0; c < n; ++c) acc += A[r][c] * cd(x[2 * c], x[2 * c + 1]);
            dx[2 * r] = acc.real();
            dx[2 * r + 1] = acc.imag();
            const cd integrand = cd(x[2 * r], x[2 * r + 1]) * phase;
            dx[2 * n + 2 * r] = integrand.real();
            dx[2 * n + 2 * r + 1] = integrand.imag();
        }
    };
    const double T = 40.0 / decay_rate;
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, s,
                            0.0, T, T / 1e4);
    std::vector<cd> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = {s[2 * n + 2 * j], s[2 * n + 2 * j + 1]};
    return out;
}

double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

// Force balance evaluated directly in x, independent of the cubic reduction.
double net_force(const StandardParams& p, double x) {
    const double h = p.kappa / 2.0;
    const double u = p.detuning - p.slope * x;
    return -p.omega_m * p.omega_m * (x - p.x0) + p.pressure * h * h / (h * h + u * u);
}

StandardSteadyState at_position(const StandardParams& p, double x) {
    StandardSteadyState s;
    s.x = x;
    s.alpha = standard_alpha(p, x);
    return s;
}

}  // namespace

TEST_CASE("steady state without radiation pressure is the bare cavity") {
    StandardParams p;
    p.detuning = 0.3;
    p.slope = 2.0;
    p.kappa = 1.5;
    p.omega_m = 0.7;
    p.x0 = 0.4;
    const auto roots = steady_state_standard(p);
    REQUIRE(roots.size() == 1);
    CHECK(roots[0].x == doctest::Approx(0.4).epsilon(1e-15));
    const cd expect = 0.75 / (0.75 - I * (0.3 - 2.0 * 0.4));
    CHECK(std::abs(roots[0].alpha - expect) < 1e-15);
    CHECK(roots[0].stable);
}

TEST_CASE("weak drive has one continuous solution") {
    StandardParams p;
    p.detuning = -0.4;
    p.slope = 1.0;
    p.omega_m = 1.0;
    double last = 0.0;
    for (int i = 0; i <= 10; ++i) {
        p.pressure = -1e-3 * i;
        const auto roots = steady_state_standard(p);
        REQUIRE(roots.size() == 1);
        if (i > 0) CHECK(std::abs(roots[0].x - last) < 2e-3);
        last = roots[0].x;
    }
}

TEST_CASE("strong red-detuned drive is bistable and matches a sign-change count") {
    StandardParams p;
    p.kappa = 1.0;
    p.slope = 1.0;
    p.omega_m = 1.0;
    p.detuning = -3.0;
    p.pressure = -8.0;
    const auto roots = steady_state_standard(p);
    REQUIRE(roots.size() == 3);
    CHECK(roots[0].stable);
    CHECK_FALSE(roots[1].stable);
    CHECK(roots[2].stable);

    std::vector<double> crossings;
    const int n = 2'000'000;
    const double lo = -10.0, hi = 2.0;
    double prev = net_force(p, lo);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        const double f = net_force(p, x);
        if ((f > 0) != (prev > 0)) crossings.push_back(x);
        prev = f;
    }
    REQUIRE(crossings.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(roots[i].x - crossings[i]) < 1e-5);
        // both steady-state equations, in units where kappa = omega_m = 1
        CHECK(std::abs(net_force(p, roots[i].x)) < 1e-10);
        const cd a = roots[i].alpha;
        const cd lhs = I * (p.detuning - p.slope * roots[i].x) * a + 0.5 * (1.0 - a);
        CHECK(std::abs(lhs) < 1e-12);
    }
}

TEST_CASE("light susceptibility limits") {
    StandardParams p;
    p.kappa = 2.0;
    p.omega_m = 1.0;
    p.slope = 0.0;
    auto ss = at_position(p, 0.3);
    CHECK(std::abs(light_susceptibility_standard(p, ss, 0.7)) == 0.0);

    p.slope = 1.5;
    p.detuning = 1.5 * 0.3;
    ss = at_position(p, 0.3);
    const cd chi = light_susceptibility_standard(p, ss, 0.0);
    CHECK(std::abs(chi - ss.alpha * 1.5 / (I * 1.0)) < 1e-15);
}

TEST_CASE("light susceptibility matches the time-domain impulse response") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        StandardParams p;
        p.kappa = log_uniform(rng, 0.2, 5.0);
        p.slope = u(rng) * 3.0;
        p.detuning = u(rng) * 3.0;
        p.omega_m = 1.0;
        const auto ss = at_position(p, u(rng));
        const double omega = u(rng) * 4.0;
        const cd drift = I * (p.detuning - p.slope * ss.x) - p.kappa / 2.0;
        const auto got = impulse_transform({{drift}}, {-I * p.slope * ss.alpha}, omega, p.kappa / 2.0);
        const cd expect = light_susceptibility_standard(p, ss, omega);
        CHECK(rel(got[0], expect) < 1e-6);
    }
}

TEST_CASE("zero coupling gives zero self-energy") {
    StandardParams p;
    p.kappa = 1.0;
    p.omega_m = 0.8;
    p.detuning = -0.5;
    p.slope = 1.0;
    p.pressure = 0.0;
    auto s = self_energy_standard(p, at_position(p, 0.1), 0.8);
    CHECK(s.sigma == cd(0.0, 0.0));
    CHECK(s.gamma_opt == 0.0);
    CHECK(s.spring_shift == 0.0);

    p.pressure = -2.0;
    p.slope = 0.0;
    s = self_energy_standard(p, at_position(p, 0.1), 0.8);
    CHECK(s.sigma == cd(0.0, 0.0));

    TwoModeParams q;
    q.coupling = 1.0;
    q.slope = 0.0;
    q.pressure = 1.0;
    q.detuning = 0.3;
    const auto st = two_mode_state(q, 0.2);
    CHECK(self_energy_two_mode(q, st, q.omega_m).sigma == cd(0.0, 0.0));
}

TEST_CASE("resonant drive balances Stokes and anti-Stokes") {
    StandardParams p;
    p.kappa = 1.0;
    p.omega_m = 0.6;
    p.slope = 1.0;
    p.pressure = -1.0;
    p.detuning = 0.25;
    const auto ss = at_position(p, 0.25);
    CHECK(std::abs(self_energy_standard(p, ss, p.omega_m).gamma_opt) < 1e-15);
    CHECK(gamma_opt_closed_form(p, ss) == 0.0);
}

TEST_CASE("self-energy damping equals the two-Lorentzian closed form") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        StandardParams p;
        p.kappa = log_uniform(rng, 1e-2, 10.0);
        p.omega_m = log_uniform(rng, 1e-2, 10.0);
        p.slope = u(rng) * 10.0;
        p.pressure = u(rng) * 10.0;
        p.detuning = u(rng) * 10.0;
        const auto ss = at_position(p, u(rng) * 3.0);
        const double closed = gamma_opt_closed_form(p, ss);
        const double from_sigma = self_energy_standard(p, ss, p.omega_m).gamma_opt;
        worst = std::max(worst, std::abs(from_sigma - closed) / std::abs(closed));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("red detuning cools, blue detuning heats") {
    StandardParams p;
    p.kappa = 1.0;
    p.omega_m = 0.5;
    p.slope = 1.0;
    p.pressure = -1.0;  // omega' > 0 implies P < 0
    for (double d : {-2.0, -0.5, -0.05}) {
        p.detuning = d;
        CHECK(gamma_opt_closed_form(p, at_position(p, 0.0)) > 0.0);
        CHECK(self_energy_standard(p, at_position(p, 0.0), p.omega_m).gamma_opt > 0.0);
    }
    for (double d : {0.05, 0.5, 2.0}) {
        p.detuning = d;
        CHECK(gamma_opt_closed_form(p, at_position(p, 0.0)) < 0.0);
    }
}

namespace {

double argmax_detuning(double omega_m, bool fixed_amplitude, double lo, double hi) {
    StandardParams p;
    p.kappa = 1.0;
    p.omega_m = omega_m;
    p.slope = -1.0;
    p.pressure = 1.0;
    double best = -1.0, arg = 0.0;
    const int n = 200'000;
    for (int i = 0; i <= n; ++i) {
        p.detuning = lo + (hi - lo) * i / n;
        StandardSteadyState ss = at_position(p, 0.0);
        if (fixed_amplitude) ss.alpha = 1.0;
        const double g = std::abs(gamma_opt_closed_form(p, ss));
        if (g > best) {
            best = g;
            arg = p.detuning;
        }
    }
    return arg;
}

}  // namespace

TEST_CASE("resolved sidebands put the cooling optimum at the mechanical frequency") {
    const double w = 10.0;
    CHECK(std::abs(argmax_detuning(w, false, -3.0 * w, 0.0) + w) < 0.05 * w);
    CHECK(std::abs(argmax_detuning(w, false, 0.0, 3.0 * w) - w) < 0.05 * w);
}

TEST_CASE("bad-cavity optimum sits at the steepest slope of the resonance") {
    // d/du of the Lorentzian h^2/(h^2+u^2) peaks at |u| = h/sqrt(3).
    const double steepest = 0.5 / std::sqrt(3.0);
    CHECK(std::abs(argmax_detuning(1e-2, true, -2.0, 0.0) + steepest) < 0.05 * steepest);
    CHECK(std::abs(argmax_detuning(1e-2, true, 0.0, 2.0) - steepest) < 0.05 * steepest);
    // With the intracavity intensity following the detuning it moves to h/sqrt(5).
    const double following = 0.5 / std::sqrt(5.0);
    CHECK(std::abs(argmax_detuning(1e-2, false, -2.0, 0.0) + following) < 0.05 * following);
}

TEST_CASE("two-mode steady state") {
    TwoModeParams p;
    p.coupling = 0.0;
    p.slope = -1.3;
    p.kappa_l = 0.8;
    p.kappa_r = 1.1;
    const double x = 0.7;
    p.detuning = p.slope * x;
    auto s = two_mode_state(p, x);
    CHECK(std::abs(std::abs(s.alpha_l) - 1.0) < 1e-15);
    CHECK(s.alpha_r == cd(0.0, 0.0));

    p.detuning = -p.slope * x;
    s = two_mode_state(p, x);
    CHECK(s.alpha_r == cd(0.0, 0.0));

    p.coupling = 0.4;
    p.detuning = 0.2;
    s = two_mode_state(p, x);
    // residual of M alpha + [kappa_L/2, 0] = 0
    const cd m11 = I * (p.detuning - p.slope * x) - p.kappa_l / 2.0;
    const cd m22 = I * (p.detuning + p.slope * x) - p.kappa_r / 2.0;
    CHECK(std::abs(m11 * s.alpha_l - I * p.coupling * s.alpha_r + p.kappa_l / 2.0) < 1e-12);
    CHECK(std::abs(-I * p.coupling * s.alpha_l + m22 * s.alpha_r) < 1e-12);

    p.kappa_l = p.kappa_r = 0.0;
    CHECK_THROWS_AS(two_mode_state(p, x), mim::SingularSystemError);
    p.coupling = -1.0;
    p.kappa_l = 1.0;
    CHECK_THROWS_AS(two_mode_state(p, x), mim::InvalidArgument);
}

TEST_CASE("driven intensity peaks at the split eigenmodes") {
    TwoModeParams p;
    p.coupling = 2.0;
    p.slope = -1.0;
    auto intensity = [&](double d) {
        p.detuning = d;
        return std::norm(two_mode_state(p, 0.0).alpha_l);
    };
    std::vector<double> peaks;
    const int n = 80'000;
    double a = intensity(-8.0), b = intensity(-8.0 + 16.0 / n);
    for (int i = 2; i <= n; ++i) {
        const double d = -8.0 + 16.0 * i / n;
        const double c = intensity(d);
        if (b > a && b > c) peaks.push_back(d - 16.0 / n);
        a = b;
        b = c;
    }
    REQUIRE(peaks.size() == 2);
    // |alpha_L|^2 = h^2 (D^2 + h^2) / ((G - D^2)^2 + 4 D^2 h^2), G = g^2 + h^2, is
    // stationary at D^2 = -h^2 + sqrt((G + h^2)^2 - 4 h^4): the split modes,
    // pulled slightly outward by the linewidth.
    const double h = 0.5, G = 4.0 + h * h;
    const double peak = std::sqrt(-h * h + std::sqrt((G + h * h) * (G + h * h) - 4.0 * h * h * h * h));
    CHECK(std::abs(peak - 2.0) < 0.1);
    CHECK(std::abs(peaks[0] + peak) < 2e-3);
    CHECK(std::abs(peaks[1] - peak) < 2e-3);
}

TEST_CASE("eigenfrequencies") {
    TwoModeParams p;
    p.coupling = 1.5;
    p.slope = -2.0;
    auto [up, down] = eigenfrequencies_two_mode(p, 0.0);
    CHECK(up == 1.5);
    CHECK(down == -1.5);
    p.coupling = 0.0;
    std::tie(up, down) = eigenfrequencies_two_mode(p, -0.3);
    CHECK(up == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(down == doctest::Approx(-0.6).epsilon(1e-15));
    p.coupling = 1.0;
    for (double x : {50.0, 500.0, 5000.0}) {
        const double lin = 2.0 * x;
        const double asym = lin + 1.0 / (2.0 * lin);
        up = eigenfrequencies_two_mode(p, x).first;
        // next series term is g^4 / (8 |w' x|^3)
        CHECK(std::abs(up - asym) < 1.0 / (4.0 * lin * lin * lin));
    }
}

TEST_CASE("two-mode susceptibility limits and impulse response") {
    TwoModeParams p;
    p.coupling = 0.7;
    p.slope = 0.0;
    p.detuning = 0.2;
    auto s = two_mode_state(p, 0.4);
    auto chi = susceptibility_vector_two_mode(p, s, 0.9);
    CHECK(chi[0] == cd(0.0, 0.0));
    CHECK(chi[1] == cd(0.0, 0.0));

    // block-diagonal limit
    p.coupling = 0.0;
    p.slope = 1.7;
    p.kappa_l = 0.9;
    s = two_mode_state(p, 0.4);
    StandardParams q;
    q.kappa = 0.9;
    q.slope = 1.7;
    q.detuning = 0.2;
    q.omega_m = 1.0;
    q.pressure = -0.8;
    p.pressure = -0.8;
    const auto ss = at_position(q, 0.4);
    for (double w : {-1.3, 0.0, 0.5, 2.2}) {
        chi = susceptibility_vector_two_mode(p, s, w);
        CHECK(rel(chi[0], light_susceptibility_standard(q, ss, w)) < 1e-12);
        CHECK(chi[1] == cd(0.0, 0.0));
        CHECK(rel(self_energy_two_mode(p, s, w).sigma, self_energy_standard(q, ss, w).sigma) < 1e-9);
    }

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        TwoModeParams r;
        r.coupling = std::abs(u(rng)) * 3.0;
        r.slope = -1.0 - std::abs(u(rng));
        r.kappa_l = log_uniform(rng, 0.3, 3.0);
        r.kappa_r = log_uniform(rng, 0.3, 3.0);
        r.detuning = u(rng) * 3.0;
        const double x = u(rng) * 2.0;
        const auto st = two_mode_state(r, x);
        const double omega = u(rng) * 4.0;
        const std::vector<std::vector<cd>> M = {
            {I * (r.detuning - r.slope * x) - r.kappa_l / 2.0, -I * r.coupling},
            {-I * r.coupling, I * (r.detuning + r.slope * x) - r.kappa_r / 2.0}};
        const std::vector<cd> kick = {-I * r.slope * st.alpha_l, I * r.slope * st.alpha_r};
        const auto got = impulse_transform(M, kick, omega, std::min(r.kappa_l, r.kappa_r) / 2.0);
        const auto expect = susceptibility_vector_two_mode(r, st, omega);
        const double scale = std::max(std::abs(expect[0]), std::abs(expect[1]));
        CHECK(std::abs(got[0] - expect[0]) < 1e-6 * scale);
        CHECK(std::abs(got[1] - expect[1]) < 1e-6 * scale);
    }
}

TEST_CASE("static force at the degeneracy point is an eigenmode interference term") {
    TwoModeParams p;
    p.coupling = 1.3;
    p.slope = -1.0;
    for (double d = -4.0; d <= 4.0; d += 0.37) {
        p.detuning = d;
        const auto s = two_mode_state(p, 0.0);
        const cd plus = (s.alpha_l + s.alpha_r) / std::sqrt(2.0);
        const cd minus = (s.alpha_l - s.alpha_r) / std::sqrt(2.0);
        const double force = std::norm(s.alpha_l) - std::norm(s.alpha_r);
        const double interference = 2.0 * (plus * std::conj(minus)).real();
        CHECK(std::abs(force - interference) < 1e-14 * std::max(1.0, std::norm(s.alpha_l)));
    }
}

TEST_CASE("device coupling relations") {
    const double omega_l = 2.0 * M_PI * 299792458.0 / 1064e-9;
    const auto [g, slope] = TwoModeParams::device_coupling(0.98, 0.067, omega_l);
    CHECK(g == doctest::Approx(299792458.0 / 0.067 * std::sqrt(0.04)).epsilon(1e-14));
    CHECK(slope == doctest::Approx(-omega_l / 0.0335).epsilon(1e-14));
    CHECK_THROWS_AS(TwoModeParams::device_coupling(1.2, 0.067, omega_l), mim::InvalidArgument);
}

TEST_CASE("cooling map is inversion antisymmetric for equal linewidths") {
    MapSpec spec;
    spec.omega_m_over_kappa = 1.0;
    spec.g_over_kappa = 2.0;
    spec.x_axis = linear_axis(-10.0, 10.0, 101);
    spec.delta_axis = linear_axis(-10.0, 10.0, 101);
    const auto map = cooling_map(spec);
    for (const auto& e : map.node_errors) CHECK(e.empty());
    for (double v : map.values) CHECK(std::isfinite(v));
    CHECK(antisymmetry_defect(map) < 1e-10);
    CHECK(map.self_oscillating.empty());

    // conjugation plus the gauge alpha_R -> -alpha_R maps (x, D) to (-x, -D)
    // for any pair of linewidths
    spec.kappa_r_over_kappa_l = 2.0;
    CHECK(antisymmetry_defect(cooling_map(spec)) < 1e-10);

    spec.x_axis = linear_axis(-1.0, 2.0, 5);
    CHECK_THROWS_AS(antisymmetry_defect(cooling_map(spec)), mim::InvalidArgument);
}

TEST_CASE("self-oscillation flag marks amplification beyond intrinsic damping") {
    MapSpec spec;
    spec.omega_m_over_kappa = 1.0;
    spec.g_over_kappa = 2.0;
    spec.gamma_m_over_kappa = 1e-3;
    spec.x_axis = linear_axis(-4.0, 4.0, 9);
    spec.delta_axis = linear_axis(-4.0, 4.0, 9);
    const auto map = cooling_map(spec);
    REQUIRE(map.self_oscillating.size() == map.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i)
        CHECK(map.self_oscillating[i] == (map.values[i] * map.saturation < -1e-3));
}

TEST_CASE("map normalization and large-displacement saturation") {
    CHECK(std::abs(max_cooling(1.0, 2.0, 50.0) - 1.0) < 0.02);
    CHECK(std::abs(max_cooling(1.0, 2.0, -50.0) - 1.0) < 0.02);
    CHECK(max_cooling(1.0, 2.0, 8.0) > 0.9);
    CHECK(max_cooling(1.0, 0.5, 0.0) > 1.0);
}

TEST_CASE("flat band at the degeneracy point for strong tunneling") {
    MapSpec spec;
    spec.omega_m_over_kappa = 1.0;
    spec.g_over_kappa = 8.0;
    spec.delta_axis = linear_axis(-30.0, 30.0, 6001);
    const auto cut = cooling_cross_section(spec, 0.0);
    double worst = 0.0;
    for (double v : cut) worst = std::max(worst, std::abs(v));
    CHECK(worst < 0.01);
}

TEST_CASE("degeneracy-point effect is strongest when the splitting matches the mechanical frequency") {
    MapSpec spec;
    spec.omega_m_over_kappa = 1.0;
    spec.delta_axis = linear_axis(-6.0, 6.0, 1201);
    double best = 0.0, best_g = 0.0;
    for (int i = 5; i <= 200; ++i) {
        spec.g_over_kappa = 0.01 * i;
        double peak = 0.0;
        for (double v : cooling_cross_section(spec, 0.0)) peak = std::max(peak, std::abs(v));
        if (peak > best) {
            best = peak;
            best_g = spec.g_over_kappa;
        }
    }
    CHECK(std::abs(best_g - 0.5) < 0.05 * 0.5);
}
