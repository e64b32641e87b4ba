#ifndef MIM_TESTS_ORACLES_HPP
#define MIM_TESTS_ORACLES_HPP

// Independent reference computations used only by the tests.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "mim/cavity_optics.hpp"

namespace oracle {

using cd = std::complex<double>;
using cl = std::complex<long double>;

struct SlabScattering {
    cd r;  // referenced to the entry face
    cd t;  // referenced to the exit face
};

// Single slab from interface matching of E and dE/dz, field a e^{ikz} + b e^{-ikz}.
inline SlabScattering fresnel_slab(cd n, double thickness, double k0) {
    using M2 = std::array<std::array<cd, 2>, 2>;
    const cd i(0, 1);
    auto wave = [&](cd kk, double z) {
        return M2{{{std::exp(i * kk * z), std::exp(-i * kk * z)},
                   {i * kk * std::exp(i * kk * z), -i * kk * std::exp(-i * kk * z)}}};
    };
    auto inv = [](const M2& m) {
        const cd det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        return M2{{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
    };
    auto mul = [](const M2& a, const M2& b) {
        M2 c{};
        for (int r = 0; r < 2; ++r)
            for (int col = 0; col < 2; ++col) c[r][col] = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        return c;
    };
    const cd k1 = k0;
    const cd k2 = k0 * n;
    const M2 T = mul(mul(inv(wave(k1, 0.0)), wave(k2, 0.0)),
                     mul(inv(wave(k2, thickness)), wave(k1, thickness)));
    // [1, r] = T [a3, 0]
    const cd a3 = 1.0 / T[0][0];
    const cd r = T[1][0] * a3;
    return {r, a3 * std::exp(i * k0 * thickness)};
}

struct Amplitudes {
    cd a1, a2, a3, a4, refl, tran;
};

// Sums the multiple-reflection series pass by pass until a pass changes the
// amplitudes by less than `rel_tol` relative.
inline Amplitudes multiple_reflection_sum(const mim::optics::CavitySystem& s, double k,
                                          double rel_tol = 1e-14) {
    const cl i(0, 1);
    const long double kl = k;
    const long double L = s.length, dx = s.displacement, Ld = s.membrane.thickness;
    const long double l1 = L / 2 + dx - Ld / 2, l2 = L / 2 - dx - Ld / 2;
    const cl e1 = std::exp(i * (kl * l1)), e2 = std::exp(i * (kl * l2));
    const auto m = mim::optics::membrane_amplitudes(s.membrane, k);
    const cl rd(m.r.real(), m.r.imag()), td(m.t.real(), m.t.imag());
    const cl tau = i * td;
    const long double rL = s.left.r, rR = s.right.r, tL = s.left.t, tR = s.right.t;

    cl a1 = 0, a2 = 0, a3 = 0, a4 = 0;
    cl s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    // Pass j carries the wave that has undergone j scatterings.
    a1 = i * tL;
    for (long pass = 0; pass < 50'000'000; ++pass) {
        s1 += a1;
        s2 += a2;
        s3 += a3;
        s4 += a4;
        const cl n1 = rL * e1 * a2;
        const cl n2 = rd * e1 * a1 + tau * e2 * a4;
        const cl n3 = tau * e1 * a1 + rd * e2 * a4;
        const cl n4 = rR * e2 * a3;
        a1 = n1;
        a2 = n2;
        a3 = n3;
        a4 = n4;
        const long double term = std::abs(a1) + std::abs(a2) + std::abs(a3) + std::abs(a4);
        const long double total = std::abs(s1) + std::abs(s2) + std::abs(s3) + std::abs(s4);
        if (pass > 4 && term < rel_tol * total) break;
    }
    auto c = [](cl v) { return cd(static_cast<double>(v.real()), static_cast<double>(v.imag())); };
    const cl refl = i * tL * e1 * s2 + rL;
    const cl tran = i * tR * e2 * s3;
    return {c(s1), c(s2), c(s3), c(s4), c(refl), c(tran)};
}

inline double airy_finesse(double power_reflectivity) {
    return M_PI * std::sqrt(power_reflectivity) / (1.0 - power_reflectivity);
}

// Brent-free golden-section maximum of f on [a, b].
inline double golden_max(const std::function<double(double)>& f, double a, double b, int iters = 200) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < iters; ++it) {
        if (fc > fd) {
            b = d; d = c; fd = fc; c = b - g * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd; d = a + g * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace oracle

#endif
