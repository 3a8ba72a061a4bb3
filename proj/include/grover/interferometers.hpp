#pragma once

// The fixed interferometer topologies: the merged-line tunable HOM setup,
// the Grover-Mach-Zehnder (two Grover four-ports joined by lines a1, b1, a2,
// b2) and the plain beam-splitter HOM baseline.
//
// Line/mode convention for the four-port setups: mode 0 = a1, 1 = b1,
// 2 = a2, 3 = b2.  Detectors A, B, C, D sit on a1, b1, a2, b2 after G2.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "grover/elements.hpp"
#include "grover/fock.hpp"

namespace grover {

// Wrap an angle into (-pi, pi].
inline double wrap_phase(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(angle, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

class PhaseConfig {
public:
    PhaseConfig() = default;
    PhaseConfig(double phi0, double phi1, double phi2)
        : phi_{wrap_phase(phi0), wrap_phase(phi1), wrap_phase(phi2)} {}
    explicit PhaseConfig(const std::array<double, 3>& phi) : PhaseConfig(phi[0], phi[1], phi[2]) {}

    double phi0() const { return phi_[0]; }
    double phi1() const { return phi_[1]; }
    double phi2() const { return phi_[2]; }
    double operator[](std::size_t i) const { return phi_.at(i); }
    const std::array<double, 3>& values() const { return phi_; }

    // 2 phi0 + phi1 - phi2, the relative phase of the two branch amplitudes.
    double branch_phase() const { return 2.0 * phi_[0] + phi_[1] - phi_[2]; }

private:
    std::array<double, 3> phi_{0.0, 0.0, 0.0};
};

// The four independent pairwise rates.  R_BD = R_AC and R_BC = R_AD.
struct CoincidenceRates {
    double r_ac = 0.0;
    double r_ad = 0.0;
    double r_ab = 0.0;
    double r_cd = 0.0;
    std::optional<double> r0;

    std::array<double, 4> values() const { return {r_ac, r_ad, r_ab, r_cd}; }

    static CoincidenceRates from_values(const std::array<double, 4>& v,
                                        std::optional<double> r0 = std::nullopt) {
        CoincidenceRates r{v[0], v[1], v[2], v[3], r0};
        r.validate();
        return r;
    }

    void validate() const {
        for (double v : values()) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw InvalidArgument("coincidence rates must be finite and non-negative");
            }
        }
        if (r0 && !(*r0 > 0.0)) throw InvalidArgument("r0 must be positive");
    }
};

// Outcome probabilities keyed by sorted detector letters, e.g. "AB", "CC".
class DetectionDistribution {
public:
    DetectionDistribution() = default;
    DetectionDistribution(std::string detectors, std::map<std::string, double> outcomes)
        : detectors_(std::move(detectors)), outcomes_(std::move(outcomes)) {}

    const std::string& detectors() const { return detectors_; }
    const std::map<std::string, double>& outcomes() const { return outcomes_; }

    // Order-insensitive lookup; unknown outcomes have probability 0.
    double probability(std::string_view outcome) const {
        std::string key(outcome);
        std::sort(key.begin(), key.end());
        const auto it = outcomes_.find(key);
        return it == outcomes_.end() ? 0.0 : it->second;
    }

    double total() const {
        double s = 0.0;
        for (const auto& [k, p] : outcomes_) s += p;
        return s;
    }

    // Mixture w * this + (1 - w) * other.
    DetectionDistribution mixed_with(const DetectionDistribution& other, double weight) const {
        std::map<std::string, double> out;
        for (const auto& [k, p] : outcomes_) out[k] += weight * p;
        for (const auto& [k, p] : other.outcomes_) out[k] += (1.0 - weight) * p;
        return {detectors_, std::move(out)};
    }

private:
    std::string detectors_;
    std::map<std::string, double> outcomes_;
};

// Map each ket to a detector-letter outcome; modes sharing a letter are
// summed (detectors that see several modes).
inline DetectionDistribution detect(const StateVector& state, std::string_view mode_labels) {
    if (mode_labels.size() != state.mode_count()) {
        throw DimensionMismatch("one detector label per mode required");
    }
    std::map<std::string, double> outcomes;
    for (const auto& [ket, p] : probabilities(state)) {
        std::string key;
        for (std::size_t m = 0; m < ket.mode_count(); ++m) key.append(ket[m], mode_labels[m]);
        std::sort(key.begin(), key.end());
        outcomes[key] += p;
    }
    std::string detectors(mode_labels);
    std::sort(detectors.begin(), detectors.end());
    detectors.erase(std::unique(detectors.begin(), detectors.end()), detectors.end());
    return {std::move(detectors), std::move(outcomes)};
}

// Two photons on ports 1 and 2 of a four-port.
inline StateVector pair_input_state() { return StateVector::basis(FockState{1, 1, 0, 0}); }

// (1/(2 sqrt2)) (a3^dag + a4^dag)^2 |0>
inline StateVector transmitted_pair_state() {
    const double h = 0.5;
    const double q = 1.0 / (2.0 * std::numbers::sqrt2);
    return StateVector(4, {{FockState{0, 0, 2, 0}, h},
                           {FockState{0, 0, 0, 2}, h},
                           {FockState{0, 0, 1, 1}, 2.0 * q}});
}

// -(1/(2 sqrt2)) (a1^dag - a2^dag)^2 |0>
inline StateVector reflected_pair_state() {
    const double h = 0.5;
    const double q = 1.0 / (2.0 * std::numbers::sqrt2);
    return StateVector(4, {{FockState{2, 0, 0, 0}, -h},
                           {FockState{0, 2, 0, 0}, -h},
                           {FockState{1, 1, 0, 0}, 2.0 * q}});
}

// Grover four-port, phase phi on lines 1 and 2, then lines {1,3} merged onto
// detector a and {2,4} onto detector b.  p(ab) = cos^2 phi.
inline DetectionDistribution tunable_hom(double phi) {
    const StateVector scattered = apply_mode_map(pair_input_state(), grover_unitary());
    const StateVector shifted = apply_mode_map(scattered, phase_map({phi, phi, 0.0, 0.0}));
    const MergeResult merged = merge_modes(shifted, {{0, 2}, {1, 3}});
    return detect(merged.state, "ab");
}

// Closed-form rates.  r0 is the source-dependent scale.
inline CoincidenceRates grover_mz_rates(const PhaseConfig& phases, double r0) {
    if (!(r0 > 0.0)) throw InvalidArgument("r0 must be positive");
    const double s1 = std::sin(phases.phi1());
    const double s2 = std::sin(phases.phi2());
    const double c1 = std::cos(phases.phi1());
    const double c2 = std::cos(phases.phi2());
    const double ct = std::cos(phases.branch_phase());
    CoincidenceRates r;
    r.r_ac = r0 * (s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * ct);
    r.r_ad = r0 * (s1 * s1 + s2 * s2 + 2.0 * s1 * s2 * ct);
    r.r_ab = r0 * ((c1 + 1) * (c1 + 1) + (c2 + 1) * (c2 + 1) + 2.0 * (c1 + 1) * (c2 + 1) * ct);
    r.r_cd = r0 * ((c1 - 1) * (c1 - 1) + (c2 - 1) * (c2 - 1) + 2.0 * (c1 - 1) * (c2 - 1) * ct);
    // Cancellation can leave tiny negatives.
    r.r_ac = std::max(r.r_ac, 0.0);
    r.r_ad = std::max(r.r_ad, 0.0);
    r.r_ab = std::max(r.r_ab, 0.0);
    r.r_cd = std::max(r.r_cd, 0.0);
    r.r0 = r0;
    return r;
}

// Line phases: a1 = phi0 + phi1, b1 = phi0, a2 = phi2, b2 = 0.
inline ModeMap grover_mz_phase_map(const PhaseConfig& phases) {
    return phase_map({phases.phi0() + phases.phi1(), phases.phi0(), phases.phi2(), 0.0});
}

// Output state of the single-pass Grover-Mach-Zehnder.
inline StateVector grover_mz_output_state(const PhaseConfig& phases) {
    const ModeMap chain = grover_unitary() * grover_mz_phase_map(phases) * grover_unitary();
    return apply_mode_map(pair_input_state(), chain);
}

inline DetectionDistribution simulate_grover_mz(const PhaseConfig& phases) {
    return detect(grover_mz_output_state(phases), "ABCD");
}

// Simulated probabilities on the closed-form scale: R = 16 r0 p.
inline CoincidenceRates rates_from_distribution(const DetectionDistribution& dist, double r0) {
    CoincidenceRates r;
    r.r_ac = 16.0 * r0 * dist.probability("AC");
    r.r_ad = 16.0 * r0 * dist.probability("AD");
    r.r_ab = 16.0 * r0 * dist.probability("AB");
    r.r_cd = 16.0 * r0 * dist.probability("CD");
    r.r0 = r0;
    return r;
}

enum class HomInput { pair, single };

// Beam-splitter HOM.  `overlap` is the mode overlap |<xi1|xi2>|^2 of the two
// photons' temporal wavepackets (1 at zero delay, 0 for widely separated
// arrivals); the result is the corresponding mixture of the indistinguishable
// and distinguishable detection statistics.
inline DetectionDistribution hom_baseline(double overlap = 1.0, HomInput input = HomInput::pair) {
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw InvalidArgument("overlap must be in [0, 1]");
    if (input == HomInput::single) {
        return detect(apply_mode_map(StateVector::basis(FockState{1, 0}), beamsplitter50(2, 0, 1)),
                      "AB");
    }
    const DetectionDistribution same =
        detect(apply_mode_map(StateVector::basis(FockState{1, 1}), beamsplitter50(2, 0, 1)), "AB");
    // Orthogonal internal labels: modes (A, B) x (label 0, label 1).
    const ModeMap split = beamsplitter50(4, 0, 1) * beamsplitter50(4, 2, 3);
    const DetectionDistribution distinct =
        detect(apply_mode_map(StateVector::basis(FockState{1, 0, 0, 1}), split), "ABAB");
    return same.mixed_with(distinct, overlap);
}

}  // namespace grover
