#ifndef MIM_CAVITY_OPTICS_HPP
#define MIM_CAVITY_OPTICS_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mim::optics {

using complex = std::complex<double>;

struct OpticalConstants {
    double wavelength = 1064e-9;  // m

    double wavenumber() const;
    void validate() const;
};

struct MembraneSlab {
    double thickness = 0.0;        // m
    complex index{1.0, 0.0};

    void validate() const;
    // L_d = 0, n = 1: r_d = 0, t_d = -i.
    static MembraneSlab absent() { return {}; }
};

struct MembraneAmplitudes {
    complex r;
    complex t;
    double phase_r = 0.0;  // arg(r), in (-pi, pi]
};

// Real-index slab of the given thickness whose power reflectivity at k equals
// `power_reflectivity`, taking the lowest such index.
MembraneSlab slab_with_reflectivity(double power_reflectivity, double thickness, double k);

MembraneAmplitudes membrane_amplitudes(const MembraneSlab& membrane, double k);
MembraneAmplitudes membrane_amplitudes(const MembraneSlab& membrane,
                                       const OpticalConstants& optics);

struct EndMirror {
    double r = 1.0;
    double t = 0.0;

    double loss() const { return 1.0 - r * r - t * t; }
    void validate() const;

    static EndMirror lossless(double r);
    // Lossless mirror pair whose empty-cavity Airy finesse equals `finesse`.
    static EndMirror matched_to_finesse(double finesse);
};

struct CavitySystem {
    EndMirror left;
    EndMirror right;
    MembraneSlab membrane;
    double length = 0.067;      // m
    double displacement = 0.0;  // m, membrane center relative to cavity center

    double left_length() const;
    double right_length() const;
    double scaled_position(double k) const { return 2.0 * k * displacement; }
    double fsr_hz() const;
    double fsr_wavenumber() const;  // pi / L
    // Airy finesse of the bare mirror pair (membrane ignored).
    double mirror_finesse() const;
    void validate() const;

    CavitySystem with_displacement(double dx) const;
    CavitySystem with_index(complex n) const;
};

struct FieldSolution {
    complex a1, a2, a3, a4;
    complex reflected;
    complex transmitted;

    double transmission() const { return std::norm(transmitted); }
    double reflection() const { return std::norm(reflected); }
};

// Closed-form elimination of the field equations.
FieldSolution solve_fields(const CavitySystem& system, double k);
FieldSolution solve_fields(const CavitySystem& system, const OpticalConstants& optics);
// Same system assembled as a dense 6x6 matrix and LU-solved.
FieldSolution solve_fields_direct(const CavitySystem& system, double k);

double transmission(const CavitySystem& system, double k);

// 2 phi + 2 arccos(|r| cos(delta)), arccos in [0, pi].
double resonance_detuning(double abs_r, double phase_r, double delta);

// Resonance of the closed lossless model nearest to k_guess. `branch` selects
// the band (0 evaluates the detuning at delta, 1 at delta + pi); `order` the
// longitudinal index m in 2 k (L - L_d) + detuning = 2 pi m. Resonances have
// m even on branch 0 and m odd on branch 1; other roots are spurious.
struct DispersionRoot {
    double k = 0.0;
    int branch = 0;
    std::int64_t order = 0;
};

DispersionRoot dispersion_resonance(const CavitySystem& system, double k_guess);
double dispersion_resonance(const CavitySystem& system, int branch, std::int64_t order,
                            double k_guess);

double find_resonance(const CavitySystem& system, double k_guess);
double finesse_from_linewidth(const CavitySystem& system, double k_res);
double finesse_from_ringdown(double tau, double fsr_hz);

struct PositionScanResult {
    std::vector<double> displacement;
    std::vector<double> finesse;
    std::vector<double> transmission;
    std::vector<double> reflection;
    std::vector<double> k_res;
    std::vector<bool> valid;
    std::vector<std::string> error;

    std::size_t size() const { return displacement.size(); }
};

// Tracks one resonance across the displacements. The first point picks the
// dispersion root nearest to k_guess; its (branch, order) label then seeds
// every point. Failed points are marked invalid with their error message.
PositionScanResult scan_position(const CavitySystem& system_template,
                                 const std::vector<double>& displacements, double k_guess);
PositionScanResult scan_position(const CavitySystem& system_template,
                                 const std::vector<double>& displacements,
                                 const OpticalConstants& optics);

struct FixedFitInputs {
    double empty_finesse = 0.0;
    std::optional<double> r;  // when absent, lossless mirrors matched to empty_finesse
    std::optional<double> t;
    double thickness = 50e-9;
    double index_real = 2.2;
    double length = 0.067;
    double wavelength = 1064e-9;
};

struct AbsorptionFitResult {
    double im_n = 0.0;
    double im_n_sigma = 0.0;
    double offset = 0.0;     // fitted displacement offset, m
    double residual = 0.0;   // sum of squared relative finesse residuals
    std::size_t excluded_points = 0;
    std::size_t iterations = 0;
    FixedFitInputs fixed;
    double mirror_r = 0.0;
    double mirror_t = 0.0;
};

struct FitOptions {
    std::size_t max_iterations = 60;
    double outlier_sigma = 3.0;
};

AbsorptionFitResult fit_absorption(const PositionScanResult& data, const FixedFitInputs& fixed,
                                   const FitOptions& options = {});

// Cavity implied by the fixed inputs for a given Im(n).
CavitySystem fit_model_system(const FixedFitInputs& fixed, double im_n);

// Model scan with multiplicative Gaussian noise on the finesse.
PositionScanResult synthesize_scan(const CavitySystem& system,
                                   const std::vector<double>& displacements, double k_guess,
                                   double relative_noise, std::uint64_t seed);

struct FinesseCurve {
    double empty_finesse = 0.0;
    EndMirror mirror;
    PositionScanResult scan;
};

std::vector<FinesseCurve> predict_finesse_limit(const MembraneSlab& membrane,
                                                const std::vector<double>& empty_finesse,
                                                const OpticalConstants& optics,
                                                double length = 0.067,
                                                std::size_t points_per_period = 101);

// k nearest to k_guess at which the empty cavity is resonant (multiple of pi/L).
double empty_cavity_resonance(double length, double k_guess);

}  // namespace mim::optics

#endif
