#pragma once

// Three-axis Grover-Sagnac: rotation rates <-> interferometer phases.
//
// Per-axis Sagnac phase phi_j = 8 pi A_j omega_j / (lambda c).  The loop
// layout mixes them into the interferometer phases as
//   phi0 = (phi_x - phi_z) / 2,  phi1 = phi_z,  phi2 = phi_x + phi_y
// and the inverse is
//   phi_x = 2 phi0 + phi1,  phi_y = phi2 - 2 phi0 - phi1,  phi_z = phi1.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "grover/interferometers.hpp"
#include "grover/inversion.hpp"

namespace grover {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct SagnacGeometry {
    // Projected loop areas perpendicular to x, y, z (m^2).
    double area_x = 1.0;
    double area_y = 1.0;
    double area_z = 1.0;
    double wavelength = 1550e-9;  // m
    // Loop radius for the exact delay (m); 0 when unknown.
    double radius = 0.0;

    void validate() const {
        if (!(area_x >= 0.0 && area_y >= 0.0 && area_z >= 0.0)) {
            throw GeometryError("loop areas must be non-negative");
        }
        if (!(wavelength > 0.0)) throw GeometryError("wavelength must be positive");
        if (!(radius >= 0.0)) throw GeometryError("radius must be non-negative");
    }

    std::array<double, 3> areas() const { return {area_x, area_y, area_z}; }
};

struct RotationRates {
    double omega_x = 0.0;  // rad/s
    double omega_y = 0.0;
    double omega_z = 0.0;

    std::array<double, 3> values() const { return {omega_x, omega_y, omega_z}; }
};

// Approximation breaks down unless r |omega| << c.  Returns a message per
// offending axis.
inline std::vector<std::string> validity_warnings(const RotationRates& rates,
                                                  const SagnacGeometry& geometry,
                                                  double max_ratio = 1e-3) {
    std::vector<std::string> out;
    const char* names[] = {"x", "y", "z"};
    const auto w = rates.values();
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::isfinite(w[i])) {
            out.push_back(std::string("omega_") + names[i] + " is not finite");
        } else if (geometry.radius * std::abs(w[i]) > max_ratio * kSpeedOfLight) {
            out.push_back(std::string("r*omega_") + names[i] + " is not small compared to c");
        }
    }
    return out;
}

inline double sagnac_phase(double area, double omega, double wavelength) {
    if (!(area >= 0.0)) throw GeometryError("area must be non-negative");
    if (!(wavelength > 0.0)) throw GeometryError("wavelength must be positive");
    return 8.0 * std::numbers::pi * area * omega / (wavelength * kSpeedOfLight);
}

// delta t = 4 A omega / (c^2 - r^2 omega^2)
inline double exact_time_delay(double area, double radius, double omega) {
    const double v = radius * omega;
    if (std::abs(v) >= kSpeedOfLight) throw GeometryError("r |omega| >= c");
    return 4.0 * area * omega / (kSpeedOfLight * kSpeedOfLight - v * v);
}

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Maps (phi_x, phi_y, phi_z) to (phi0, phi1, phi2).
inline constexpr Matrix3 kAxisToInterferometer{{
    {0.5, 0.0, -0.5},
    {0.0, 0.0, 1.0},
    {1.0, 1.0, 0.0},
}};

// Exact inverse of kAxisToInterferometer.
inline constexpr Matrix3 kInterferometerToAxis{{
    {2.0, 1.0, 0.0},
    {-2.0, -1.0, 1.0},
    {0.0, 1.0, 0.0},
}};

inline std::array<double, 3> multiply(const Matrix3& m, const std::array<double, 3>& v) {
    std::array<double, 3> out{};
    for (std::size_t r = 0; r < 3; ++r) {
        out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
    }
    return out;
}

inline double determinant(const Matrix3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline std::array<double, 3> axis_phases(const RotationRates& rates, const SagnacGeometry& g) {
    g.validate();
    return {sagnac_phase(g.area_x, rates.omega_x, g.wavelength),
            sagnac_phase(g.area_y, rates.omega_y, g.wavelength),
            sagnac_phase(g.area_z, rates.omega_z, g.wavelength)};
}

// Unwrapped interferometer phases; PhaseConfig wraps them.
inline std::array<double, 3> interferometer_phases(const RotationRates& rates,
                                                   const SagnacGeometry& geometry) {
    return multiply(kAxisToInterferometer, axis_phases(rates, geometry));
}

inline PhaseConfig phases_from_rotation(const RotationRates& rates, const SagnacGeometry& geometry) {
    return PhaseConfig(interferometer_phases(rates, geometry));
}

inline RotationRates rotation_from_phase_values(const std::array<double, 3>& phases,
                                                const SagnacGeometry& geometry) {
    geometry.validate();
    const auto axis = multiply(kInterferometerToAxis, phases);
    const auto areas = geometry.areas();
    const char* names[] = {"x", "y", "z"};
    std::array<double, 3> omega{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (areas[i] <= 0.0) {
            throw GeometryError(std::string("zero area on axis ") + names[i] + ": unobservable");
        }
        omega[i] = axis[i] * geometry.wavelength * kSpeedOfLight / (8.0 * std::numbers::pi * areas[i]);
    }
    return {omega[0], omega[1], omega[2]};
}

inline RotationRates rotation_from_phases(const PhaseConfig& phases, const SagnacGeometry& geometry) {
    return rotation_from_phase_values(phases.values(), geometry);
}

struct RotationReconstruction {
    RotationRates rates;
    // Direction (sign) of the rotation about x, y, z cannot be told apart.
    std::array<bool, 3> direction_ambiguous{false, false, false};
    // Rotation vectors for every equal-fit phase solution.
    std::vector<RotationRates> candidates;
    PhaseSolution phases;
};

inline RotationReconstruction reconstruct_rotation(const CoincidenceRates& rates,
                                                   const CalibrationRecord& calibration,
                                                   const SagnacGeometry& geometry,
                                                   const InversionOptions& opts = {}) {
    geometry.validate();
    RotationReconstruction out;
    out.phases = invert_rates(rates, calibration, false, opts);
    out.rates = rotation_from_phases(out.phases.phases, geometry);
    const auto chosen = out.rates.values();
    for (const auto& alt : out.phases.alternatives) {
        const RotationRates r = rotation_from_phases(alt, geometry);
        out.candidates.push_back(r);
        const auto v = r.values();
        for (std::size_t i = 0; i < 3; ++i) {
            const double eps = 1e-9 * (std::abs(chosen[i]) + std::abs(v[i])) + 1e-300;
            if (std::abs(v[i]) > eps && std::abs(chosen[i]) > eps &&
                std::signbit(v[i]) != std::signbit(chosen[i])) {
                out.direction_ambiguous[i] = true;
            }
        }
    }
    return out;
}

}  // namespace grover
