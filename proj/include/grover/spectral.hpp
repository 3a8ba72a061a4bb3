#pragma once

// Finite-bandwidth coincidence probability for the merged-line setup with
// delays tau0 (between the two two-photon amplitudes) and tau1, tau2 (between
// the lines inside one amplitude).
//
// With a common spectral density rho(w) = |Phi(w)|^2 and its characteristic
// function g(t) = int rho(w) exp(i w t) dw, the two double integrals over
// (w_a, w_b) separate:
//   I_c = Re[ g(tau0) g(tau0 + dtau) ]
//   I_s = Im[ g(tau0) conj(g(tau0 + dtau)) ]
//   p   = 1/2 + cos(2 phi) I_c / 2 + sin(2 phi) I_s / 2.
// The tensor-product Simpson rule factorizes the same way, so evaluating the
// two one-dimensional sums is exactly the tensor-product quadrature.
//
// Frequencies are integrated in units of the bandwidth, x = (w - center) / bandwidth.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "grover/errors.hpp"

namespace grover {

enum class SpectrumKind { sinc, gaussian, rectangular };

inline std::string to_string(SpectrumKind kind) {
    switch (kind) {
    case SpectrumKind::sinc: return "sinc";
    case SpectrumKind::gaussian: return "gaussian";
    case SpectrumKind::rectangular: return "rectangular";
    }
    return "?";
}

struct QuadratureSpec {
    // Simpson panels over the frequency window; must be even.
    std::size_t panels = 2048;
    // Allowed |p(panels) - p(2 panels)|.
    double refinement_tolerance = 1e-4;
};

namespace detail {

// Composite Simpson: calls f(x, weight) for every node.
template <typename F>
void simpson_nodes(double lo, double hi, std::size_t panels, F&& f) {
    if (panels < 2 || panels % 2 != 0) throw InvalidArgument("Simpson needs an even panel count");
    const double h = (hi - lo) / static_cast<double>(panels);
    for (std::size_t i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        f(lo + h * static_cast<double>(i), w * h / 3.0);
    }
}

}  // namespace detail

// Spectral density of each photon, normalized to unit area.
//
//   sinc:        |Phi|^2 ~ sinc^2(pi x)  (zeros at integer x), window +-W
//   gaussian:    |Phi|^2 ~ exp(-x^2),                          window +-W
//   rectangular: |Phi|^2 ~ 1 on |x| <= 1,                      window +-1
class SpectralProfile {
public:
    static constexpr double kDefaultWindow = 8.0;
    static constexpr std::size_t kNormalizationPanels = 1 << 16;

    static SpectralProfile make(SpectrumKind kind, double bandwidth = 1.0, double center = 0.0,
                                double window = kDefaultWindow) {
        if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
            throw InvalidArgument("bandwidth must be positive");
        }
        if (!(window > 0.0)) throw InvalidArgument("window half-width must be positive");
        SpectralProfile p(kind, bandwidth, center, kind == SpectrumKind::rectangular ? 1.0 : window,
                          1.0);
        double area = 0.0;
        detail::simpson_nodes(-p.window_, p.window_, kNormalizationPanels,
                              [&](double x, double w) { area += w * p.shape(x); });
        p.scale_ = 1.0 / area;
        return p;
    }

    // Escape hatch for tests and tabulated input: explicit density scale.
    SpectralProfile(SpectrumKind kind, double bandwidth, double center, double window, double scale)
        : kind_(kind), bandwidth_(bandwidth), center_(center), window_(window), scale_(scale) {}

    SpectrumKind kind() const { return kind_; }
    double bandwidth() const { return bandwidth_; }
    double center() const { return center_; }
    // Half-width of the integration window in bandwidth units.
    double window() const { return window_; }

    // Density per unit x.
    double density(double x) const { return scale_ * shape(x); }

    // Unnormalized profile shape.
    double shape(double x) const {
        switch (kind_) {
        case SpectrumKind::sinc: {
            if (x == 0.0) return 1.0;
            const double s = std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
            return s * s;
        }
        case SpectrumKind::gaussian: return std::exp(-x * x);
        case SpectrumKind::rectangular: return std::abs(x) <= 1.0 ? 1.0 : 0.0;
        }
        return 0.0;
    }

    double integral(std::size_t panels) const {
        double area = 0.0;
        detail::simpson_nodes(-window_, window_, panels,
                              [&](double x, double w) { area += w * density(x); });
        return area;
    }

    // g(t) with t in units of 1 / bandwidth.
    std::complex<double> characteristic(double t, std::size_t panels) const {
        std::complex<double> sum(0.0, 0.0);
        detail::simpson_nodes(-window_, window_, panels, [&](double x, double w) {
            sum += w * density(x) * std::polar(1.0, x * t);
        });
        // Carrier: w = center + bandwidth * x, so w * tau = (center/bandwidth) t + x t.
        return sum * std::polar(1.0, center_ / bandwidth_ * t);
    }

private:
    SpectrumKind kind_;
    double bandwidth_;
    double center_;
    double window_;
    double scale_;
};

// Delays in units of 1 / bandwidth.
class DelayConfig {
public:
    DelayConfig() = default;
    DelayConfig(double tau0, double tau1, double tau2) : tau0_(tau0), tau1_(tau1), tau2_(tau2) {}

    double tau0() const { return tau0_; }
    double tau1() const { return tau1_; }
    double tau2() const { return tau2_; }
    double dtau() const { return tau2_ - tau1_; }

private:
    double tau0_ = 0.0;
    double tau1_ = 0.0;
    double tau2_ = 0.0;
};

inline constexpr double kSpectrumNormTolerance = 1e-6;

namespace detail {

// A density that looks unnormalized only on the working grid is a resolution
// problem; one that is off on a fine grid too is a bad spectrum.
inline void check_normalization(const SpectralProfile& spectrum, std::size_t panels) {
    const double area = spectrum.integral(panels);
    if (std::abs(area - 1.0) <= kSpectrumNormTolerance) return;
    const double resolved = spectrum.integral(std::max<std::size_t>(panels, 1u << 16));
    if (std::abs(resolved - 1.0) > kSpectrumNormTolerance) {
        throw NotNormalized("spectral density integrates to " + std::to_string(resolved));
    }
    throw QuadratureError("grid of " + std::to_string(panels) + " panels integrates the density to " +
                          std::to_string(area));
}

inline double coincidence_at(double phi, const DelayConfig& delays, const SpectralProfile& spectrum,
                             std::size_t panels) {
    const auto g0 = spectrum.characteristic(delays.tau0(), panels);
    const auto g1 = spectrum.characteristic(delays.tau0() + delays.dtau(), panels);
    const double ic = (g0 * g1).real();
    const double is = (g0 * std::conj(g1)).imag();
    return 0.5 + 0.5 * std::cos(2.0 * phi) * ic + 0.5 * std::sin(2.0 * phi) * is;
}

}  // namespace detail

// Coincidence probability between the merged outputs a and b.  Evaluated at
// `grid.panels` and twice that; throws QuadratureError if they disagree.
inline double coincidence_probability(double phi, const DelayConfig& delays,
                                      const SpectralProfile& spectrum,
                                      const QuadratureSpec& grid = {}) {
    if (grid.panels < 2 || grid.panels % 2 != 0) throw InvalidArgument("grid needs an even panel count");
    detail::check_normalization(spectrum, 2 * grid.panels);
    const double coarse = detail::coincidence_at(phi, delays, spectrum, grid.panels);
    const double fine = detail::coincidence_at(phi, delays, spectrum, 2 * grid.panels);
    if (std::abs(coarse - fine) > grid.refinement_tolerance) {
        throw QuadratureError("quadrature refinement changed p by " +
                              std::to_string(std::abs(coarse - fine)));
    }
    return fine;
}

enum class ScanVariable { tau0, dtau };

inline std::string to_string(ScanVariable v) { return v == ScanVariable::tau0 ? "tau0" : "dtau"; }

struct ScanRange {
    double min = -5.0;
    double max = 5.0;
    double step = 0.05;

    std::vector<double> points() const {
        if (!(min < max)) throw InvalidArgument("scan range needs min < max");
        if (!(step > 0.0)) throw InvalidArgument("scan step must be positive");
        const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
        std::vector<double> out;
        out.reserve(count);
        for (std::size_t k = 0; k < count; ++k) out.push_back(min + step * static_cast<double>(k));
        return out;
    }
};

struct ScanPoint {
    double delay;
    double probability;
};

// Scan tau0 with dtau = `fixed`, or scan dtau (tau1 = 0, tau2 = dtau) with
// tau0 = `fixed`.
inline std::vector<ScanPoint> hom_scan(double phi, ScanVariable variable, double fixed,
                                       const ScanRange& range, const SpectralProfile& spectrum,
                                       const QuadratureSpec& grid = {}) {
    std::vector<ScanPoint> out;
    for (double d : range.points()) {
        const DelayConfig delays =
            variable == ScanVariable::tau0 ? DelayConfig(d, 0.0, fixed) : DelayConfig(fixed, 0.0, d);
        out.push_back({d, coincidence_probability(phi, delays, spectrum, grid)});
    }
    return out;
}

}  // namespace grover
