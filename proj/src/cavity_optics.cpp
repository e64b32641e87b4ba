#include "mim/cavity_optics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "mim/constants.hpp"
#include "mim/errors.hpp"
#include "mim/parallel.hpp"

namespace mim::optics {

namespace {

// Phases k L reach ~1e5 rad, so the field model runs in extended precision
// to keep linewidths of finesse ~1e6 resolvable.
using ld = long double;
using cld = std::complex<long double>;

constexpr ld kPiL = 3.141592653589793238462643383279502884L;
const cld kI{0.0L, 1.0L};

// Complex value with its derivative along k.
struct Dual {
    cld v;
    cld d;
    Dual(cld value = {}, cld deriv = {}) : v(value), d(deriv) {}
};

Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(const Dual& a, const Dual& b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

cld value_of(const cld& x) { return x; }
cld value_of(const Dual& x) { return x.v; }

template <class S>
struct Slab {
    S r;
    S t;
};

Slab<Dual> slab_dual(const MembraneSlab& m, ld k) {
    const cld n(m.index.real(), m.index.imag());
    const ld L = m.thickness;
    const cld x = k * n * L;
    const cld s = std::sin(x);
    const cld c = std::cos(x);
    const cld n2 = n * n;
    const cld D = 2.0L * kI * n * c + (n2 + 1.0L) * s;
    const cld dD = n * L * (-2.0L * kI * n * s + (n2 + 1.0L) * c);
    const cld N = (n2 - 1.0L) * s;
    const cld dN = (n2 - 1.0L) * n * L * c;
    const Dual num{N, dN};
    const Dual den{D, dD};
    const Dual r = num / den;
    const Dual t = Dual{2.0L * n, 0.0L} / den;
    return {r, t};
}

Slab<cld> slab_value(const MembraneSlab& m, ld k) {
    const cld n(m.index.real(), m.index.imag());
    const cld x = k * n * static_cast<ld>(m.thickness);
    const cld s = std::sin(x);
    const cld n2 = n * n;
    const cld D = 2.0L * kI * n * std::cos(x) + (n2 + 1.0L) * s;
    return {(n2 - 1.0L) * s / D, 2.0L * n / D};
}

template <class S>
struct Fields {
    S a1, a2, a3, a4, refl, tran;
};

struct Geometry {
    ld l1;
    ld l2;
};

Geometry geometry(const CavitySystem& s) {
    const ld L = s.length;
    const ld dx = s.displacement;
    const ld Ld = s.membrane.thickness;
    return {L / 2 + dx - Ld / 2, L / 2 - dx - Ld / 2};
}

// Closed-form elimination; S is cld or Dual.
template <class S>
Fields<S> eliminate(const CavitySystem& sys, const S& e1, const S& e2, const Slab<S>& slab) {
    const S rL{cld(sys.left.r)};
    const S rR{cld(sys.right.r)};
    const S itL{kI * static_cast<ld>(sys.left.t)};
    const S itR{kI * static_cast<ld>(sys.right.t)};
    const S one{cld(1.0L)};
    const S tau = S{kI} * slab.t;
    const S q = e2 * e2;
    const S d3 = one - rR * slab.r * q;
    const S rho = slab.r + tau * tau * rR * q / d3;
    const S d1 = one - rL * e1 * e1 * rho;
    if (std::abs(value_of(d1) * value_of(d3)) < 1e-14L)
        throw SingularSystemError("field system is singular (lossless resonance with r = 1)");
    Fields<S> f;
    f.a1 = itL / d1;
    f.a2 = e1 * rho * f.a1;
    f.a3 = tau * e1 * f.a1 / d3;
    f.a4 = rR * e2 * f.a3;
    f.refl = itL * e1 * f.a2 + rL;
    f.tran = itR * e2 * f.a3;
    return f;
}

Fields<cld> fields_value(const CavitySystem& sys, ld k) {
    const Geometry g = geometry(sys);
    const cld e1 = std::exp(kI * (k * g.l1));
    const cld e2 = std::exp(kI * (k * g.l2));
    return eliminate<cld>(sys, e1, e2, slab_value(sys.membrane, k));
}

ld transmission_ld(const CavitySystem& sys, ld k) { return std::norm(fields_value(sys, k).tran); }

ld transmission_slope(const CavitySystem& sys, ld k) {
    const Geometry g = geometry(sys);
    const cld e1 = std::exp(kI * (k * g.l1));
    const cld e2 = std::exp(kI * (k * g.l2));
    const Dual d1{e1, kI * g.l1 * e1};
    const Dual d2{e2, kI * g.l2 * e2};
    const Fields<Dual> f = eliminate<Dual>(sys, d1, d2, slab_dual(sys.membrane, k));
    return 2.0L * std::real(std::conj(f.tran.v) * f.tran.d);
}

// Unwrapped closed-cavity phase 2 k (L - L_d) + detuning(delta + branch*pi).
ld dispersion_phase(const CavitySystem& sys, int branch, ld k) {
    const Slab<cld> slab = slab_value(sys.membrane, k);
    const ld abs_r = std::min<ld>(std::abs(slab.r), 1.0L);
    ld phase;
    if (abs_r > 1e-12L) {
        phase = std::arg(slab.r);
    } else {
        // r_d -> 0 limit: only 2 phi matters and it follows from the transmission phase.
        phase = std::arg(kI * slab.t) - kPiL / 2;
    }
    const ld delta = 2.0L * k * static_cast<ld>(sys.displacement) + branch * kPiL;
    const ld det = 2.0L * phase + 2.0L * std::acos(abs_r * std::cos(delta));
    return 2.0L * k * static_cast<ld>(sys.length - sys.membrane.thickness) + det;
}

ld fsr_k_ld(const CavitySystem& sys) { return kPiL / static_cast<ld>(sys.length); }

template <class F>
std::pair<ld, ld> solve_bracket(F f, ld a, ld b, ld fa, ld fb) {
    boost::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<ld>(std::numeric_limits<ld>::digits - 3);
    return boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
}

}  // namespace

double OpticalConstants::wavenumber() const { return 2.0 * kPi / wavelength; }

void OpticalConstants::validate() const {
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
        throw InvalidArgument("wavelength must be positive");
}

void MembraneSlab::validate() const {
    if (!(thickness >= 0.0) || !std::isfinite(thickness))
        throw InvalidArgument("membrane thickness must be >= 0");
    if (!(index.real() >= 1.0)) throw InvalidArgument("membrane Re(n) must be >= 1");
    if (!(index.imag() >= 0.0)) throw InvalidArgument("membrane Im(n) must be >= 0");
}

MembraneAmplitudes membrane_amplitudes(const MembraneSlab& membrane, double k) {
    membrane.validate();
    const complex n = membrane.index;
    const complex x = k * n * membrane.thickness;
    const complex s = std::sin(x);
    const complex n2 = n * n;
    const complex D = 2.0 * complex(0, 1) * n * std::cos(x) + (n2 + 1.0) * s;
    MembraneAmplitudes a;
    a.r = (n2 - 1.0) * s / D;
    a.t = 2.0 * n / D;
    a.phase_r = std::arg(a.r);
    return a;
}

MembraneAmplitudes membrane_amplitudes(const MembraneSlab& membrane,
                                       const OpticalConstants& optics) {
    optics.validate();
    return membrane_amplitudes(membrane, optics.wavenumber());
}

MembraneSlab slab_with_reflectivity(double power_reflectivity, double thickness, double k) {
    if (!(power_reflectivity >= 0.0 && power_reflectivity < 1.0))
        throw InvalidArgument("power reflectivity must lie in [0, 1)");
    if (power_reflectivity == 0.0) return MembraneSlab::absent();
    if (!(thickness > 0.0)) throw InvalidArgument("thickness must be positive");
    // |r_d|^2 vanishes at multiples of the half-wave index and has a single
    // bump in between; take the rising side of the first bump that reaches R.
    const double half = kPi / (k * thickness);
    auto excess = [&](double n) {
        return std::norm(membrane_amplitudes(MembraneSlab{thickness, {n, 0.0}}, k).r) -
               power_reflectivity;
    };
    double lo = 1.0;
    for (int bump = 1; bump <= 1000; ++bump) {
        const double hi = half * bump;
        if (hi <= lo) continue;
        const auto peak = boost::math::tools::brent_find_minima([&](double n) { return -excess(n); }, lo, hi, 52);
        if (-peak.second >= 0.0) {
            boost::uintmax_t iters = 200;
            auto tol = boost::math::tools::eps_tolerance<double>(52);
            const auto root = boost::math::tools::toms748_solve(excess, lo, peak.first, tol, iters);
            return MembraneSlab{thickness, {0.5 * (root.first + root.second), 0.0}};
        }
        lo = hi;
    }
    throw InvalidArgument("reflectivity not reachable for this thickness");
}

void EndMirror::validate() const {
    if (!(r > 0.0 && r <= 1.0)) throw InvalidArgument("mirror r must lie in (0, 1]");
    if (!(t >= 0.0)) throw InvalidArgument("mirror t must be >= 0");
    if (r * r + t * t > 1.0 + 1e-15) throw InvalidArgument("mirror r^2 + t^2 exceeds 1");
}

EndMirror EndMirror::lossless(double r) {
    EndMirror m{r, std::sqrt(std::max(0.0, 1.0 - r * r))};
    m.validate();
    return m;
}

EndMirror EndMirror::matched_to_finesse(double finesse) {
    if (!(finesse > 0.0)) throw InvalidArgument("finesse must be positive");
    const double r = (-kPi + std::sqrt(kPi * kPi + 4.0 * finesse * finesse)) / (2.0 * finesse);
    return lossless(r);
}

double CavitySystem::left_length() const {
    return length / 2 + displacement - membrane.thickness / 2;
}

double CavitySystem::right_length() const {
    return length / 2 - displacement - membrane.thickness / 2;
}

double CavitySystem::fsr_hz() const { return kSpeedOfLight / (2.0 * length); }

double CavitySystem::fsr_wavenumber() const { return kPi / length; }

double CavitySystem::mirror_finesse() const {
    const double R = left.r * right.r;
    if (R >= 1.0) return std::numeric_limits<double>::infinity();
    return kPi * std::sqrt(R) / (1.0 - R);
}

void CavitySystem::validate() const {
    left.validate();
    right.validate();
    membrane.validate();
    if (!(length > 0.0)) throw InvalidArgument("cavity length must be positive");
    if (!(left_length() > 0.0) || !(right_length() > 0.0))
        throw InvalidArgument("membrane displacement leaves no room on one side");
}

CavitySystem CavitySystem::with_displacement(double dx) const {
    CavitySystem s = *this;
    s.displacement = dx;
    return s;
}

CavitySystem CavitySystem::with_index(complex n) const {
    CavitySystem s = *this;
    s.membrane.index = n;
    return s;
}

FieldSolution solve_fields(const CavitySystem& system, double k) {
    system.validate();
    const Fields<cld> f = fields_value(system, k);
    auto c = [](const cld& x) { return complex(static_cast<double>(x.real()),
                                               static_cast<double>(x.imag())); };
    return {c(f.a1), c(f.a2), c(f.a3), c(f.a4), c(f.refl), c(f.tran)};
}

FieldSolution solve_fields(const CavitySystem& system, const OpticalConstants& optics) {
    optics.validate();
    return solve_fields(system, optics.wavenumber());
}

FieldSolution solve_fields_direct(const CavitySystem& system, double k) {
    system.validate();
    const Geometry g = geometry(system);
    const ld kl = k;
    const cld e1 = std::exp(kI * (kl * g.l1));
    const cld e2 = std::exp(kI * (kl * g.l2));
    const Slab<cld> m = slab_value(system.membrane, kl);
    const cld tau = kI * m.t;
    const ld rL = system.left.r, rR = system.right.r;
    const ld tL = system.left.t, tR = system.right.t;

    // Unknowns: A1, A2, A3, A4, A_refl, A_tran.
    using Mat = Eigen::Matrix<cld, 6, 6>;
    using Vec = Eigen::Matrix<cld, 6, 1>;
    Mat M = Mat::Identity();
    Vec b = Vec::Zero();
    M(0, 1) = -rL * e1;
    b(0) = kI * tL;
    M(1, 0) = -m.r * e1;
    M(1, 3) = -tau * e2;
    M(2, 0) = -tau * e1;
    M(2, 3) = -m.r * e2;
    M(3, 2) = -rR * e2;
    M(4, 1) = -kI * tL * e1;
    b(4) = rL;
    M(5, 2) = -kI * tR * e2;

    Eigen::PartialPivLU<Mat> lu(M);
    if (std::abs(lu.determinant()) < 1e-14L)
        throw SingularSystemError("field system is singular (lossless resonance with r = 1)");
    const Vec x = lu.solve(b);
    auto c = [](const cld& v) { return complex(static_cast<double>(v.real()),
                                               static_cast<double>(v.imag())); };
    return {c(x(0)), c(x(1)), c(x(2)), c(x(3)), c(x(4)), c(x(5))};
}

double transmission(const CavitySystem& system, double k) {
    system.validate();
    return static_cast<double>(transmission_ld(system, k));
}

double resonance_detuning(double abs_r, double phase_r, double delta) {
    if (!(abs_r >= 0.0 && abs_r <= 1.0)) throw DomainError("|r_d| must lie in [0, 1]");
    const double arg = abs_r * std::cos(delta);
    if (std::abs(arg) > 1.0) throw DomainError("arccos argument outside [-1, 1]");
    return 2.0 * phase_r + 2.0 * std::acos(arg);
}

double dispersion_resonance(const CavitySystem& system, int branch, std::int64_t order,
                            double k_guess) {
    system.validate();
    if (branch != 0 && branch != 1) throw InvalidArgument("branch must be 0 or 1");
    if (((order % 2) + 2) % 2 != branch)
        throw InvalidArgument("order parity must equal the branch index");
    const ld target = 2.0L * kPiL * static_cast<ld>(order);
    auto f = [&](ld k) { return dispersion_phase(system, branch, k) - target; };
    const ld fsr = fsr_k_ld(system);
    ld a = static_cast<ld>(k_guess) - fsr, b = static_cast<ld>(k_guess) + fsr;
    ld fa = f(a), fb = f(b);
    for (int widen = 0; widen < 60 && fa > 0; ++widen) {
        a -= fsr;
        fa = f(a);
    }
    for (int widen = 0; widen < 60 && fb < 0; ++widen) {
        b += fsr;
        fb = f(b);
    }
    if (fa > 0 || fb < 0) throw ConvergenceError("dispersion root not bracketed");
    const auto r = solve_bracket(f, a, b, fa, fb);
    return static_cast<double>(0.5L * (r.first + r.second));
}

DispersionRoot dispersion_resonance(const CavitySystem& system, double k_guess) {
    system.validate();
    DispersionRoot best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int branch = 0; branch < 2; ++branch) {
        const ld phase = dispersion_phase(system, branch, k_guess);
        // Only orders of matching parity are resonances: k L' + phi = +-arccos(...) mod 2 pi.
        auto m0 = static_cast<std::int64_t>(std::llround(phase / (2.0L * kPiL)));
        if (((m0 % 2) + 2) % 2 != branch) ++m0;
        for (std::int64_t m = m0 - 2; m <= m0 + 2; m += 2) {
            const double k = dispersion_resonance(system, branch, m, k_guess);
            const double dist = std::abs(k - k_guess);
            if (dist < best_dist) {
                best_dist = dist;
                best = {k, branch, m};
            }
        }
    }
    return best;
}

double find_resonance(const CavitySystem& system, double k_guess) {
    system.validate();
    const ld fsr = fsr_k_ld(system);
    double mirror_f = system.mirror_finesse();
    if (!std::isfinite(mirror_f)) mirror_f = 1e9;
    const ld width = fsr / static_cast<ld>(std::max(mirror_f, 1.0));
    const ld step = width / 8.0L;
    const ld centre = k_guess;
    ld half = std::min<ld>(2.0L * width, fsr / 4.0L);

    for (;;) {
        const auto n_side = static_cast<long>(std::ceil(half / step));
        const long n = 2 * n_side + 1;
        std::vector<ld> values(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            values[static_cast<std::size_t>(i)] = transmission_ld(system, centre + (i - n_side) * step);
        const auto it = std::max_element(values.begin(), values.end());
        const long imax = it - values.begin();
        if (imax > 0 && imax < n - 1 && *it > 0.0L) {
            auto slope = [&](ld k) { return transmission_slope(system, k); };
            ld a = centre + (imax - 1 - n_side) * step;
            ld b = centre + (imax + 1 - n_side) * step;
            const ld mid = centre + (imax - n_side) * step;
            const ld s_mid = slope(mid);
            if (s_mid == 0.0L) return static_cast<double>(mid);
            if (s_mid > 0.0L) a = mid; else b = mid;
            const ld sa = slope(a), sb = slope(b);
            if (sa > 0.0L && sb < 0.0L) {
                const auto r = solve_bracket(slope, a, b, sa, sb);
                return static_cast<double>(0.5L * (r.first + r.second));
            }
            // Slope signs inconsistent (flat top at rounding level); fall back to Brent.
            auto neg = [&](ld k) { return -transmission_ld(system, k); };
            const auto r = boost::math::tools::brent_find_minima(neg, a, b, 60);
            return static_cast<double>(r.first);
        }
        if (half >= fsr / 4.0L) throw NoPeakError("transmission has no interior maximum near k_guess");
        half = std::min(2.0L * half, fsr / 4.0L);
    }
}

double finesse_from_linewidth(const CavitySystem& system, double k_res) {
    system.validate();
    const ld fsr = fsr_k_ld(system);
    const ld k0 = k_res;
    const ld peak = transmission_ld(system, k0);
    if (!(peak > 0.0L)) throw NoPeakError("zero transmission at k_res");
    const ld half_max = peak / 2.0L;
    double mirror_f = system.mirror_finesse();
    if (!std::isfinite(mirror_f)) mirror_f = 1e9;
    const ld start = fsr / static_cast<ld>(std::max(mirror_f, 1.0)) / 4.0L;
    auto f = [&](ld k) { return transmission_ld(system, k) - half_max; };

    auto crossing = [&](ld sign) {
        ld inner = 0.0L;
        ld outer = start;
        while (f(k0 + sign * outer) >= 0.0L) {
            inner = outer;
            outer *= 2.0L;
            if (outer > fsr / 2.0L) {
                if (f(k0 + sign * fsr / 2.0L) >= 0.0L)
                    throw OverlapError("half-maximum points farther than half an FSR");
                outer = fsr / 2.0L;
            }
        }
        ld a = k0 + sign * inner, b = k0 + sign * outer;
        if (a > b) std::swap(a, b);
        const auto r = solve_bracket(f, a, b, f(a), f(b));
        return 0.5L * (r.first + r.second);
    };
    const ld lo = crossing(-1.0L);
    const ld hi = crossing(1.0L);
    return static_cast<double>(fsr / (hi - lo));
}

double finesse_from_ringdown(double tau, double fsr_hz) {
    if (!(tau > 0.0) || !(fsr_hz > 0.0))
        throw InvalidArgument("ringdown time and FSR must be positive");
    return 2.0 * kPi * fsr_hz * tau;
}

double empty_cavity_resonance(double length, double k_guess) {
    const double fsr = kPi / length;
    return std::round(k_guess / fsr) * fsr;
}

PositionScanResult scan_position(const CavitySystem& system_template,
                                 const std::vector<double>& displacements, double k_guess) {
    PositionScanResult out;
    const std::size_t n = displacements.size();
    out.displacement = displacements;
    out.finesse.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.transmission.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.reflection.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.k_res.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.valid.assign(n, false);
    out.error.assign(n, std::string());
    if (n == 0) return out;

    const DispersionRoot seed = dispersion_resonance(system_template.with_displacement(displacements[0]), k_guess);

    // The (branch, order) label of the dispersion root is continuous in the
    // displacement, so each point can be seeded independently.
    std::vector<char> ok(n, 0);
    parallel_for(n, [&](std::size_t i) {
        try {
            const CavitySystem sys = system_template.with_displacement(displacements[i]);
            const double predicted = dispersion_resonance(sys, seed.branch, seed.order, seed.k);
            const double k = find_resonance(sys, predicted);
            const FieldSolution fs = solve_fields(sys, k);
            out.k_res[i] = k;
            out.transmission[i] = fs.transmission();
            out.reflection[i] = fs.reflection();
            out.finesse[i] = finesse_from_linewidth(sys, k);
            ok[i] = 1;
        } catch (const Error& e) {
            out.error[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < n; ++i) out.valid[i] = ok[i] != 0;
    return out;
}

PositionScanResult scan_position(const CavitySystem& system_template,
                                 const std::vector<double>& displacements,
                                 const OpticalConstants& optics) {
    optics.validate();
    return scan_position(system_template, displacements,
                         empty_cavity_resonance(system_template.length, optics.wavenumber()));
}

}  // namespace mim::optics
