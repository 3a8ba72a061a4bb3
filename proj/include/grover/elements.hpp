#pragma once

// Optical elements as ModeMaps.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "grover/fock.hpp"

namespace grover {

// 4x4 Grover coin: -1/2 on the diagonal, +1/2 elsewhere.  Real, symmetric and
// its own inverse.
inline ModeMap grover_unitary() {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Constant(4, 4, Complex(0.5, 0.0));
    u.diagonal().setConstant(Complex(-0.5, 0.0));
    return ModeMap(std::move(u), true);
}

inline ModeMap phase_map(std::size_t mode_count, std::span<const double> shifts) {
    if (shifts.size() != mode_count) {
        throw DimensionMismatch("phase_map needs one shift per mode");
    }
    const auto n = static_cast<Eigen::Index>(mode_count);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = std::polar(1.0, shifts[static_cast<std::size_t>(i)]);
    return ModeMap(std::move(m), true);
}

inline ModeMap phase_map(std::initializer_list<double> shifts) {
    return phase_map(shifts.size(), std::span<const double>(shifts.begin(), shifts.size()));
}

// Symmetric 50:50 splitter (1/sqrt2)[[1, i], [i, 1]] on modes (first, second),
// identity on every other mode.
inline ModeMap beamsplitter50(std::size_t mode_count, std::size_t first, std::size_t second) {
    if (first == second) throw InvalidArgument("beam splitter needs two distinct modes");
    if (first >= mode_count || second >= mode_count) {
        throw InvalidArgument("beam splitter mode out of range");
    }
    const auto n = static_cast<Eigen::Index>(mode_count);
    const auto a = static_cast<Eigen::Index>(first);
    const auto b = static_cast<Eigen::Index>(second);
    const double r = 1.0 / std::numbers::sqrt2;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n);
    m(a, a) = r;
    m(b, b) = r;
    m(a, b) = Complex(0.0, r);
    m(b, a) = Complex(0.0, r);
    return ModeMap(std::move(m), true);
}

enum class ElementKind { grover4, phase, beamsplitter50, identity };

struct ElementSpec {
    ElementKind kind = ElementKind::identity;
    // Phase angles in radians, one per acted mode, for ElementKind::phase.
    std::vector<double> parameters;
    std::vector<std::size_t> acted_modes;
};

// Embed an element into an N-mode ModeMap.
inline ModeMap build_element(const ElementSpec& spec, std::size_t mode_count) {
    std::set<std::size_t> seen;
    for (std::size_t m : spec.acted_modes) {
        if (m >= mode_count) throw InvalidArgument("acted mode out of range");
        if (!seen.insert(m).second) throw InvalidArgument("acted modes must be distinct");
    }
    const auto n = static_cast<Eigen::Index>(mode_count);
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Identity(n, n);
    const auto embed = [&](const Eigen::MatrixXcd& block) {
        for (std::size_t r = 0; r < spec.acted_modes.size(); ++r) {
            for (std::size_t c = 0; c < spec.acted_modes.size(); ++c) {
                full(static_cast<Eigen::Index>(spec.acted_modes[r]),
                     static_cast<Eigen::Index>(spec.acted_modes[c])) =
                    block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    };

    switch (spec.kind) {
    case ElementKind::grover4:
        if (spec.acted_modes.size() != 4) throw InvalidArgument("grover4 acts on exactly 4 modes");
        embed(grover_unitary().matrix());
        break;
    case ElementKind::phase:
        if (spec.parameters.size() != spec.acted_modes.size()) {
            throw InvalidArgument("phase element needs one angle per acted mode");
        }
        embed(phase_map(spec.parameters.size(), spec.parameters).matrix());
        break;
    case ElementKind::beamsplitter50:
        if (spec.acted_modes.size() != 2) throw InvalidArgument("beam splitter acts on 2 modes");
        embed(beamsplitter50(2, 0, 1).matrix());
        break;
    case ElementKind::identity:
        break;
    }
    return ModeMap(std::move(full), true);
}

}  // namespace grover
