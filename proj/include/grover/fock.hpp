#pragma once

// Few-photon bosonic states over N optical modes.
//
// A state is a sparse superposition of occupation-number kets.  Linear
// optical elements act on creation operators, a_i^dag -> sum_j M(j,i) a_j^dag,
// so evolving a ket means expanding a product of linear forms and collecting
// monomials back into normalized kets with sqrt(n!) factors.

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grover/errors.hpp"

namespace grover {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultPhotonCap = 4;
inline constexpr double kDefaultPruneThreshold = 1e-14;
inline constexpr double kUnitaryTolerance = 1e-12;
inline constexpr double kNormTolerance = 1e-10;

class FockState {
public:
    FockState() = default;

    explicit FockState(std::vector<int> occupations) : occupations_(std::move(occupations)) {
        if (occupations_.empty()) throw InvalidArgument("FockState needs at least one mode");
        for (int n : occupations_) {
            if (n < 0) throw InvalidArgument("negative occupation number");
        }
    }

    FockState(std::initializer_list<int> occupations)
        : FockState(std::vector<int>(occupations)) {}

    std::size_t mode_count() const { return occupations_.size(); }

    int photon_count() const {
        int total = 0;
        for (int n : occupations_) total += n;
        return total;
    }

    int operator[](std::size_t mode) const { return occupations_.at(mode); }
    std::span<const int> occupations() const { return occupations_; }

    // prod_i n_i!
    double factorial_product() const {
        double p = 1.0;
        for (int n : occupations_) p *= std::tgamma(n + 1.0);
        return p;
    }

    std::string to_string() const {
        const bool wide = std::any_of(occupations_.begin(), occupations_.end(),
                                      [](int n) { return n > 9; });
        std::string s = "|";
        for (std::size_t i = 0; i < occupations_.size(); ++i) {
            if (wide && i > 0) s += ',';
            s += std::to_string(occupations_[i]);
        }
        return s + ">";
    }

    auto operator<=>(const FockState&) const = default;

private:
    std::vector<int> occupations_;
};

// Immutable sparse superposition of Fock kets sharing mode count and photon
// number.  Amplitudes with modulus below the prune threshold are dropped.
class StateVector {
public:
    using Terms = std::map<FockState, Complex>;

    explicit StateVector(std::size_t mode_count, double prune_threshold = kDefaultPruneThreshold)
        : mode_count_(mode_count), prune_threshold_(prune_threshold) {
        if (mode_count == 0) throw InvalidArgument("StateVector needs at least one mode");
    }

    StateVector(std::size_t mode_count, Terms terms,
                double prune_threshold = kDefaultPruneThreshold)
        : StateVector(mode_count, prune_threshold) {
        for (auto& [ket, amp] : terms) {
            if (ket.mode_count() != mode_count_) {
                throw DimensionMismatch("ket " + ket.to_string() + " does not have " +
                                        std::to_string(mode_count_) + " modes");
            }
            if (photon_count_ < 0) {
                photon_count_ = ket.photon_count();
            } else if (ket.photon_count() != photon_count_) {
                throw InvalidArgument("mixed photon numbers in one StateVector");
            }
            if (std::abs(amp) >= prune_threshold_) terms_.emplace(ket, amp);
        }
    }

    StateVector(std::size_t mode_count,
                std::initializer_list<std::pair<FockState, Complex>> terms)
        : StateVector(mode_count, Terms(terms.begin(), terms.end())) {}

    static StateVector basis(const FockState& ket) {
        return StateVector(ket.mode_count(), Terms{{ket, Complex(1.0, 0.0)}});
    }

    std::size_t mode_count() const { return mode_count_; }
    // Photon number of the sector; -1 for a state with no terms at all.
    int photon_count() const { return photon_count_; }
    double prune_threshold() const { return prune_threshold_; }
    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double norm_squared() const {
        double s = 0.0;
        for (const auto& [ket, amp] : terms_) s += std::norm(amp);
        return s;
    }

    double norm() const { return std::sqrt(norm_squared()); }

    StateVector normalized() const {
        const double n = norm();
        if (n == 0.0) throw NotNormalized("cannot normalize the zero vector");
        return scaled(Complex(1.0 / n, 0.0));
    }

    StateVector scaled(Complex factor) const {
        Terms out;
        for (const auto& [ket, amp] : terms_) out.emplace(ket, amp * factor);
        return StateVector(mode_count_, std::move(out), prune_threshold_);
    }

    friend StateVector operator+(const StateVector& lhs, const StateVector& rhs) {
        if (lhs.mode_count_ != rhs.mode_count_) {
            throw DimensionMismatch("adding states over different mode counts");
        }
        Terms out = lhs.terms_;
        for (const auto& [ket, amp] : rhs.terms_) out[ket] += amp;
        return StateVector(lhs.mode_count_, std::move(out),
                           std::min(lhs.prune_threshold_, rhs.prune_threshold_));
    }

    friend StateVector operator*(Complex factor, const StateVector& state) {
        return state.scaled(factor);
    }

    std::string to_string() const {
        std::string s;
        for (const auto& [ket, amp] : terms_) {
            if (!s.empty()) s += " + ";
            s += "(" + std::to_string(amp.real()) + (amp.imag() < 0 ? "" : "+") +
                 std::to_string(amp.imag()) + "i)" + ket.to_string();
        }
        return s.empty() ? "0" : s;
    }

private:
    std::size_t mode_count_;
    double prune_threshold_;
    int photon_count_ = -1;
    Terms terms_;
};

// Linear action on creation operators.  Column i holds the image of mode i.
class ModeMap {
public:
    ModeMap(Eigen::MatrixXcd matrix, bool unitary) : matrix_(std::move(matrix)), unitary_(unitary) {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
            throw DimensionMismatch("ModeMap must be a non-empty square matrix");
        }
        if (unitary_ && !check_unitary(matrix_, kUnitaryTolerance)) {
            throw InvalidArgument("matrix flagged unitary fails M^dag M = I");
        }
    }

    static ModeMap identity(std::size_t n) {
        const auto dim = static_cast<Eigen::Index>(n);
        return ModeMap(Eigen::MatrixXcd::Identity(dim, dim), true);
    }

    std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    bool unitary() const { return unitary_; }
    Complex operator()(std::size_t row, std::size_t col) const {
        return matrix_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    // (after * before) applies `before` first.
    friend ModeMap operator*(const ModeMap& after, const ModeMap& before) {
        if (after.dimension() != before.dimension()) {
            throw DimensionMismatch("composing ModeMaps of different dimension");
        }
        Eigen::MatrixXcd product = after.matrix_ * before.matrix_;
        const bool unitary = after.unitary_ && before.unitary_;
        return ModeMap(std::move(product), unitary);
    }

    static bool check_unitary(const Eigen::MatrixXcd& m, double tolerance) {
        if (m.rows() != m.cols()) return false;
        const Eigen::MatrixXcd gram = m.adjoint() * m;
        const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
        return (gram - eye).cwiseAbs().maxCoeff() <= tolerance;
    }

private:
    Eigen::MatrixXcd matrix_;
    bool unitary_;
};

namespace detail {

// Expand every ket of `state` under a_i^dag -> sum_j images(j, i) a_j^dag.
// `images` may be rectangular (rows = output modes), which is how mode
// merging is expressed.
inline StateVector expand_creation_polynomial(const StateVector& state,
                                              const Eigen::MatrixXcd& images,
                                              std::size_t photon_cap) {
    const auto out_modes = static_cast<std::size_t>(images.rows());
    if (static_cast<std::size_t>(images.cols()) != state.mode_count()) {
        throw DimensionMismatch("map acts on " + std::to_string(images.cols()) +
                                " modes but the state has " +
                                std::to_string(state.mode_count()));
    }
    if (state.photon_count() > static_cast<int>(photon_cap)) {
        throw PhotonCapExceeded("state carries " + std::to_string(state.photon_count()) +
                                " photons, cap is " + std::to_string(photon_cap));
    }

    using Monomial = std::vector<int>;
    StateVector::Terms accumulated;

    for (const auto& [ket, amp] : state.terms()) {
        std::map<Monomial, Complex> poly{{Monomial(out_modes, 0), amp / std::sqrt(ket.factorial_product())}};
        for (std::size_t mode = 0; mode < ket.mode_count(); ++mode) {
            for (int k = 0; k < ket[mode]; ++k) {
                std::map<Monomial, Complex> next;
                for (const auto& [mono, coeff] : poly) {
                    for (std::size_t j = 0; j < out_modes; ++j) {
                        const Complex m = images(static_cast<Eigen::Index>(j),
                                                 static_cast<Eigen::Index>(mode));
                        if (m == Complex(0.0, 0.0)) continue;
                        Monomial grown = mono;
                        ++grown[j];
                        next[grown] += coeff * m;
                    }
                }
                poly = std::move(next);
            }
        }
        for (auto& [mono, coeff] : poly) {
            FockState out(std::move(mono));
            accumulated[out] += coeff * std::sqrt(out.factorial_product());
        }
    }
    return StateVector(out_modes, std::move(accumulated), state.prune_threshold());
}

}  // namespace detail

inline StateVector apply_mode_map(const StateVector& state, const ModeMap& map,
                                  std::size_t photon_cap = kDefaultPhotonCap) {
    if (map.dimension() != state.mode_count()) {
        throw DimensionMismatch("ModeMap dimension " + std::to_string(map.dimension()) +
                                " vs state modes " + std::to_string(state.mode_count()));
    }
    return detail::expand_creation_polynomial(state, map.matrix(), photon_cap);
}

inline Complex amplitude_of(const StateVector& state, const FockState& ket) {
    if (ket.mode_count() != state.mode_count()) {
        throw DimensionMismatch("query ket has " + std::to_string(ket.mode_count()) +
                                " modes, state has " + std::to_string(state.mode_count()));
    }
    const auto it = state.terms().find(ket);
    return it == state.terms().end() ? Complex(0.0, 0.0) : it->second;
}

// Born rule.  Rejects states whose norm is off by more than `tolerance`.
inline std::map<FockState, double> probabilities(const StateVector& state,
                                                 double tolerance = kNormTolerance) {
    const double n2 = state.norm_squared();
    if (std::abs(n2 - 1.0) > tolerance) {
        throw NotNormalized("state norm^2 is " + std::to_string(n2));
    }
    std::map<FockState, double> out;
    for (const auto& [ket, amp] : state.terms()) out.emplace(ket, std::norm(amp));
    return out;
}

// Two source modes identified onto one detected mode.
struct ModeMerge {
    std::size_t first;
    std::size_t second;
};

struct MergeResult {
    StateVector state;
    // norm(state) - 1; zero for lossless configurations.
    double norm_deviation;
};

// Output mode k is merges[k]; modes not named by any merge follow in
// ascending order.
inline MergeResult merge_modes(const StateVector& state, std::span<const ModeMerge> merges,
                               std::size_t photon_cap = kDefaultPhotonCap) {
    const std::size_t n = state.mode_count();
    std::vector<int> target(n, -1);
    int next = 0;
    for (const auto& m : merges) {
        if (m.first >= n || m.second >= n) throw InvalidArgument("merge names a mode out of range");
        if (m.first == m.second) throw InvalidArgument("merge pair repeats a mode");
        if (target[m.first] >= 0 || target[m.second] >= 0) {
            throw InvalidArgument("overlapping merge pairs");
        }
        target[m.first] = next;
        target[m.second] = next;
        ++next;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (target[i] < 0) target[i] = next++;
    }

    Eigen::MatrixXcd images = Eigen::MatrixXcd::Zero(next, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) images(target[i], static_cast<Eigen::Index>(i)) = 1.0;

    StateVector merged = detail::expand_creation_polynomial(state, images, photon_cap);
    const double deviation = merged.norm() - 1.0;
    return {std::move(merged), deviation};
}

inline MergeResult merge_modes(const StateVector& state,
                               std::initializer_list<ModeMerge> merges,
                               std::size_t photon_cap = kDefaultPhotonCap) {
    return merge_modes(state, std::span<const ModeMerge>(merges.begin(), merges.size()),
                       photon_cap);
}

}  // namespace grover
