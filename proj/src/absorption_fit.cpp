#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mim/cavity_optics.hpp"
#include "mim/constants.hpp"
#include "mim/errors.hpp"
#include "mim/random.hpp"

namespace mim::optics {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

struct Point {
    double dx;
    double finesse;
};

class Model {
public:
    Model(const FixedFitInputs& fixed, std::vector<Point> points)
        : fixed_(fixed), points_(std::move(points)) {
        k_guess_ = empty_cavity_resonance(fixed.length, 2.0 * kPi / fixed.wavelength);
    }

    // Relative residuals F_data / F_model - 1; failed model points get 1.
    Eigen::VectorXd residuals(double im_n, double offset) const {
        const CavitySystem sys = fit_model_system(fixed_, im_n);
        std::vector<double> dx(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) dx[i] = points_[i].dx + offset;
        const PositionScanResult scan = scan_position(sys, dx, k_guess_);
        Eigen::VectorXd r(static_cast<Eigen::Index>(points_.size()));
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(i);
            r(j) = scan.valid[i] ? points_[i].finesse / scan.finesse[i] - 1.0 : 1.0;
        }
        return r;
    }

    double period() const { return kPi / k_guess_; }

private:
    FixedFitInputs fixed_;
    std::vector<Point> points_;
    double k_guess_;
};

struct Estimate {
    double im_n = 0.0;
    double offset = 0.0;
    double ssr = 0.0;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    std::size_t iterations = 0;
};

Eigen::MatrixXd jacobian(const Model& model, double im_n, double offset, const Eigen::VectorXd& r0) {
    const double h_im = std::max(1e-7, 1e-2 * im_n);
    const double h_off = 1e-4 * model.period();
    Eigen::MatrixXd J(r0.size(), 2);
    J.col(0) = (model.residuals(im_n + h_im, offset) - r0) / h_im;
    J.col(1) = (model.residuals(im_n, offset + h_off) - r0) / h_off;
    return J;
}

Estimate levenberg_marquardt(const Model& model, double im_n, double offset,
                             std::size_t max_iterations) {
    Estimate e;
    e.im_n = im_n;
    e.offset = offset;
    e.residuals = model.residuals(im_n, offset);
    e.ssr = e.residuals.squaredNorm();
    double damping = 1e-3;
    for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
        e.iterations = iter;
        const Eigen::MatrixXd J = jacobian(model, e.im_n, e.offset, e.residuals);
        const Eigen::Matrix2d JtJ = J.transpose() * J;
        const Eigen::Vector2d g = J.transpose() * e.residuals;
        bool accepted = false;
        while (damping < 1e12) {
            Eigen::Matrix2d A = JtJ;
            A.diagonal() += damping * JtJ.diagonal().cwiseMax(1e-30);
            const Eigen::Vector2d step = A.ldlt().solve(-g);
            const double im_try = std::max(0.0, e.im_n + step(0));
            const double off_try = e.offset + step(1);
            const Eigen::VectorXd r_try = model.residuals(im_try, off_try);
            const double ssr_try = r_try.squaredNorm();
            if (ssr_try <= e.ssr) {
                const double change = e.ssr - ssr_try;
                const bool small_step = std::abs(im_try - e.im_n) <= 1e-6 * std::max(e.im_n, 1e-6) &&
                                        std::abs(off_try - e.offset) <= 1e-7 * model.period();
                e.im_n = im_try;
                e.offset = off_try;
                e.residuals = r_try;
                e.ssr = ssr_try;
                damping = std::max(damping / 3.0, 1e-9);
                accepted = true;
                if (change <= 1e-12 * std::max(ssr_try, 1e-300) || small_step) {
                    e.jacobian = jacobian(model, e.im_n, e.offset, e.residuals);
                    return e;
                }
                break;
            }
            damping *= 4.0;
        }
        if (!accepted) {
            // No descent direction at any damping: already at the minimum.
            e.jacobian = J;
            return e;
        }
    }
    throw ConvergenceError("absorption fit did not converge");
}

}  // namespace

CavitySystem fit_model_system(const FixedFitInputs& fixed, double im_n) {
    CavitySystem sys;
    if (fixed.r) {
        const double r = *fixed.r;
        const double t = fixed.t ? *fixed.t : std::sqrt(std::max(0.0, 1.0 - r * r));
        sys.left = sys.right = EndMirror{r, t};
    } else {
        sys.left = sys.right = EndMirror::matched_to_finesse(fixed.empty_finesse);
    }
    sys.membrane = MembraneSlab{fixed.thickness, {fixed.index_real, im_n}};
    sys.length = fixed.length;
    sys.validate();
    return sys;
}

AbsorptionFitResult fit_absorption(const PositionScanResult& data, const FixedFitInputs& fixed,
                                   const FitOptions& options) {
    if (!(fixed.empty_finesse > 0.0)) throw InvalidArgument("empty-cavity finesse must be positive");
    const CavitySystem probe = fit_model_system(fixed, 0.0);
    const double mirror_f = probe.mirror_finesse();
    if (std::abs(mirror_f / fixed.empty_finesse - 1.0) > 0.10)
        throw InvalidArgument("mirror r, t do not reproduce the empty-cavity finesse within 10%");

    std::vector<Point> points;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i < data.valid.size() && !data.valid[i]) continue;
        if (!std::isfinite(data.finesse[i]) || !(data.finesse[i] > 0.0)) continue;
        points.push_back({data.displacement[i], data.finesse[i]});
    }
    if (points.size() < 4) throw InvalidArgument("fit needs at least 4 valid scan points");
    std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.dx < b.dx; });

    const double period = fixed.wavelength / 2.0;
    if (points.back().dx - points.front().dx < period * (1.0 - 0.05))
        throw InvalidArgument("scan must cover at least one period of the membrane position");

    // Noise from successive differences (robust to the smooth signal).
    std::vector<double> diffs;
    double fmin = points.front().finesse, fmax = fmin;
    for (std::size_t i = 0; i < points.size(); ++i) {
        fmin = std::min(fmin, points[i].finesse);
        fmax = std::max(fmax, points[i].finesse);
        if (i > 0) diffs.push_back(std::abs(points[i].finesse - points[i - 1].finesse));
    }
    const double noise = median(diffs) / (0.6744897501960817 * std::sqrt(2.0));
    if (fmax - fmin < 3.0 * noise)
        throw DegenerateDataError("finesse variation is below three times its noise estimate");

    Model model(fixed, points);

    // Coarse start over Im(n) at zero offset.
    double best_im = 0.0, best_ssr = std::numeric_limits<double>::infinity();
    for (double im : {0.0, 1e-5, 3e-5, 1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3}) {
        const double ssr = model.residuals(im, 0.0).squaredNorm();
        if (ssr < best_ssr) {
            best_ssr = ssr;
            best_im = im;
        }
    }

    Estimate est = levenberg_marquardt(model, best_im, 0.0, options.max_iterations);
    std::size_t excluded = 0;
    const double dof = static_cast<double>(points.size()) - 2.0;
    const double spread = std::sqrt(est.ssr / std::max(dof, 1.0));
    std::vector<Point> kept;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (std::abs(est.residuals(static_cast<Eigen::Index>(i))) > options.outlier_sigma * spread)
            ++excluded;
        else
            kept.push_back(points[i]);
    }
    std::size_t total_iterations = est.iterations;
    if (excluded > 0 && kept.size() >= 4) {
        Model refit(fixed, kept);
        est = levenberg_marquardt(refit, est.im_n, est.offset, options.max_iterations);
        total_iterations += est.iterations;
    } else {
        excluded = 0;
        kept = points;
    }

    const double n_kept = static_cast<double>(kept.size());
    const double s2 = est.ssr / std::max(n_kept - 2.0, 1.0);
    const Eigen::Matrix2d JtJ = est.jacobian.transpose() * est.jacobian;
    const Eigen::Matrix2d cov = s2 * JtJ.inverse();

    AbsorptionFitResult out;
    out.im_n = est.im_n;
    out.im_n_sigma = std::sqrt(std::max(0.0, cov(0, 0)));
    out.offset = est.offset;
    out.residual = est.ssr;
    out.excluded_points = excluded;
    out.iterations = total_iterations;
    out.fixed = fixed;
    out.mirror_r = probe.left.r;
    out.mirror_t = probe.left.t;
    return out;
}

PositionScanResult synthesize_scan(const CavitySystem& system,
                                   const std::vector<double>& displacements, double k_guess,
                                   double relative_noise, std::uint64_t seed) {
    PositionScanResult scan = scan_position(system, displacements, k_guess);
    Rng rng(seed);
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const double factor = 1.0 + relative_noise * rng.normal();
        if (scan.valid[i]) scan.finesse[i] *= factor;
    }
    return scan;
}

std::vector<FinesseCurve> predict_finesse_limit(const MembraneSlab& membrane,
                                                const std::vector<double>& empty_finesse,
                                                const OpticalConstants& optics, double length,
                                                std::size_t points_per_period) {
    membrane.validate();
    optics.validate();
    if (points_per_period < 2) throw InvalidArgument("need at least two points per period");
    const double k = optics.wavenumber();
    const double k0 = empty_cavity_resonance(length, k);
    std::vector<double> dx(points_per_period);
    for (std::size_t i = 0; i < points_per_period; ++i)
        dx[i] = (kPi / k) * static_cast<double>(i) / static_cast<double>(points_per_period - 1);

    std::vector<FinesseCurve> curves;
    for (double f : empty_finesse) {
        FinesseCurve c;
        c.empty_finesse = f;
        c.mirror = EndMirror::matched_to_finesse(f);
        CavitySystem sys;
        sys.left = sys.right = c.mirror;
        sys.membrane = membrane;
        sys.length = length;
        c.scan = scan_position(sys, dx, k0);
        curves.push_back(std::move(c));
    }
    return curves;
}

}  // namespace mim::optics
