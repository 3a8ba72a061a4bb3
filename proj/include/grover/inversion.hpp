#pragma once

// Recover (phi0, phi1, phi2) and optionally r0 from the four Grover-Mach-Zehnder
// coincidence rates.
//
// The rates depend on the phases only through sin/cos of phi1 and phi2 and
// cos(2 phi0 + phi1 - phi2).  Several phase triples therefore produce the
// same rates exactly:
//   (p0, p1, p2) -> (-p0, -p1, -p2)
//   (p0, p1, p2) -> (p0 + pi, p1, p2)
//   (p0, p1, p2) -> (p0 + p1 - p2, p2, p1)
//   (p0, p1, p2) -> (p0 + p1 - p2, -p1, -p2)
// Every solution is reported together with its equal-fit alternatives, and
// the branch is chosen as the alternative closest to a reference point (the
// zero-phase calibration point, or the previous solution when tracking).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "grover/interferometers.hpp"

namespace grover {

struct CalibrationRecord {
    double r0_estimate = 0.0;
    CoincidenceRates zero_phase_rates;
    // Point the selected solution surface passes through.
    PhaseConfig branch_reference;
    std::string branch_tag = "zero-phase";
};

// Zero applied phase must give (0, 0, 16 r0, 0).  `tolerance` bounds the
// stray rates relative to R_AB.
inline CalibrationRecord calibrate(const CoincidenceRates& zero_phase_rates,
                                   double tolerance = 0.01) {
    zero_phase_rates.validate();
    const double ab = zero_phase_rates.r_ab;
    if (!(ab > 0.0)) throw CalibrationError("zero-phase R_AB must be positive");
    for (double stray : {zero_phase_rates.r_ac, zero_phase_rates.r_ad, zero_phase_rates.r_cd}) {
        if (stray > tolerance * ab) {
            throw CalibrationError("zero-phase rates deviate from the (0, 0, 16 r0, 0) pattern");
        }
    }
    CalibrationRecord rec;
    rec.r0_estimate = ab / 16.0;
    rec.zero_phase_rates = zero_phase_rates;
    return rec;
}

struct PhaseSolution {
    PhaseConfig phases;
    double r0 = 0.0;
    std::array<bool, 3> sign_ambiguous{false, false, false};
    // Root-mean-square mismatch over the four rates.
    double residual = 0.0;
    bool converged = false;
    // All solutions fitting within the ambiguity factor, selected one included.
    std::vector<PhaseConfig> alternatives;
};

struct InversionOptions {
    // Starts per axis of the multi-start lattice.
    int lattice = 8;
    int max_iterations = 200;
    // Converged when residual <= tolerance * 16 r0.
    double residual_tolerance = 1e-6;
    // Alternatives within this factor of the best residual count as equal fits.
    double ambiguity_factor = 10.0;
    // Overrides the calibration's branch reference.
    std::optional<PhaseConfig> reference;
};

namespace detail {

struct RateModel {
    std::array<double, 4> rates;         // at r0 = 1
    Eigen::Matrix<double, 4, 3> jacobian;  // d rates / d (phi0, phi1, phi2), r0 = 1
};

// R = f1^2 + f2^2 + 2 sigma f1 f2 cos(theta), theta = 2 phi0 + phi1 - phi2.
inline RateModel evaluate_rate_model(const std::array<double, 3>& phi) {
    const double s1 = std::sin(phi[1]), c1 = std::cos(phi[1]);
    const double s2 = std::sin(phi[2]), c2 = std::cos(phi[2]);
    const double theta = 2.0 * phi[0] + phi[1] - phi[2];
    const double ct = std::cos(theta), st = std::sin(theta);

    struct Form { double f1, d1, f2, d2, sigma; };
    const std::array<Form, 4> forms{{
        {s1, c1, s2, c2, -1.0},            // AC
        {s1, c1, s2, c2, +1.0},            // AD
        {c1 + 1.0, -s1, c2 + 1.0, -s2, +1.0},  // AB
        {c1 - 1.0, -s1, c2 - 1.0, -s2, +1.0},  // CD
    }};

    RateModel m;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& f = forms[k];
        const auto row = static_cast<Eigen::Index>(k);
        m.rates[k] = f.f1 * f.f1 + f.f2 * f.f2 + 2.0 * f.sigma * f.f1 * f.f2 * ct;
        const double cross = -2.0 * f.sigma * f.f1 * f.f2 * st;  // d/dtheta
        m.jacobian(row, 0) = 2.0 * cross;
        m.jacobian(row, 1) = 2.0 * f.f1 * f.d1 + 2.0 * f.sigma * f.d1 * f.f2 * ct + cross;
        m.jacobian(row, 2) = 2.0 * f.f2 * f.d2 + 2.0 * f.sigma * f.f1 * f.d2 * ct - cross;
    }
    return m;
}

inline double rms_residual(const std::array<double, 3>& phi, double r0,
                           const std::array<double, 4>& measured) {
    const auto model = evaluate_rate_model(phi);
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double d = r0 * model.rates[k] - measured[k];
        s += d * d;
    }
    return std::sqrt(s / 4.0);
}

struct LocalFit {
    std::array<double, 3> phi;
    double r0;
    double residual;
};

// Levenberg-Marquardt on the four rate residuals; r0 becomes a fourth
// unknown when `solve_r0` is set.
inline LocalFit levenberg_marquardt(std::array<double, 3> phi, double r0, bool solve_r0,
                                    const std::array<double, 4>& measured, int max_iterations) {
    const int n = solve_r0 ? 4 : 3;
    const auto residuals = [&](const std::array<double, 3>& p, double scale, Eigen::Vector4d& r,
                               Eigen::Matrix<double, 4, Eigen::Dynamic>* jac) {
        const auto model = evaluate_rate_model(p);
        for (int k = 0; k < 4; ++k) r(k) = scale * model.rates[k] - measured[k];
        if (jac) {
            jac->resize(4, n);
            jac->leftCols(3) = scale * model.jacobian;
            if (solve_r0) {
                for (int k = 0; k < 4; ++k) (*jac)(k, 3) = model.rates[k];
            }
        }
        return r.squaredNorm();
    };

    Eigen::Vector4d r;
    Eigen::Matrix<double, 4, Eigen::Dynamic> jac(4, n);
    double cost = residuals(phi, r0, r, &jac);
    double lambda = 1e-3;

    for (int iter = 0; iter < max_iterations && cost > 0.0; ++iter) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        bool improved = false;
        while (lambda < 1e12) {
            Eigen::MatrixXd damped = jtj;
            for (int i = 0; i < n; ++i) damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-grad);
            std::array<double, 3> trial{phi[0] + step(0), phi[1] + step(1), phi[2] + step(2)};
            const double trial_r0 = solve_r0 ? std::max(r0 + step(3), 1e-300) : r0;
            Eigen::Vector4d trial_r;
            const double trial_cost = residuals(trial, trial_r0, trial_r, nullptr);
            if (trial_cost < cost) {
                const bool tiny_step = step.norm() < 1e-15 * (1.0 + std::abs(phi[0]) +
                                                              std::abs(phi[1]) + std::abs(phi[2]));
                phi = trial;
                r0 = trial_r0;
                cost = residuals(phi, r0, r, &jac);
                lambda = std::max(lambda * 0.2, 1e-15);
                improved = true;
                if (tiny_step) iter = max_iterations;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    for (double& p : phi) p = wrap_phase(p);
    return {phi, r0, std::sqrt(cost / 4.0)};
}

inline double wrapped_distance(const PhaseConfig& a, const PhaseConfig& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double d = wrap_phase(a[i] - b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

inline void add_unique(std::vector<PhaseConfig>& set, const PhaseConfig& p, double tol = 1e-7) {
    for (const auto& q : set) {
        if (wrapped_distance(p, q) < tol) return;
    }
    set.push_back(p);
}

// Closure of `seed` under the exact rate-preserving transformations.
inline std::vector<PhaseConfig> symmetry_orbit(const PhaseConfig& seed) {
    std::vector<PhaseConfig> orbit{seed};
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        const PhaseConfig p = orbit[i];
        const double shifted = p.phi0() + p.phi1() - p.phi2();
        add_unique(orbit, PhaseConfig(-p.phi0(), -p.phi1(), -p.phi2()));
        add_unique(orbit, PhaseConfig(p.phi0() + std::numbers::pi, p.phi1(), p.phi2()));
        add_unique(orbit, PhaseConfig(shifted, p.phi2(), p.phi1()));
        add_unique(orbit, PhaseConfig(shifted, -p.phi1(), -p.phi2()));
    }
    return orbit;
}

// Nearest to `reference`; exact ties go to non-negative phi1, then phi2, then phi0.
inline std::size_t select_branch(const std::vector<PhaseConfig>& candidates,
                                 const PhaseConfig& reference) {
    constexpr double tie = 1e-9;
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        best_dist = std::min(best_dist, wrapped_distance(candidates[i], reference));
    }
    const auto preference = [](const PhaseConfig& p) {
        return std::make_tuple(p.phi1() >= 0.0, p.phi2() >= 0.0, p.phi0() >= 0.0, p.phi1(),
                               p.phi2(), p.phi0());
    };
    bool have = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (wrapped_distance(candidates[i], reference) > best_dist + tie) continue;
        if (!have || preference(candidates[i]) > preference(candidates[best])) {
            best = i;
            have = true;
        }
    }
    return best;
}

inline std::array<bool, 3> sign_flags(const PhaseConfig& selected,
                                      const std::vector<PhaseConfig>& alternatives) {
    constexpr double eps = 1e-9;
    std::array<bool, 3> flags{false, false, false};
    for (std::size_t i = 0; i < 3; ++i) {
        if (std::abs(selected[i]) < eps || std::abs(std::abs(selected[i]) - std::numbers::pi) < eps) {
            continue;
        }
        for (const auto& alt : alternatives) {
            if (std::abs(alt[i]) > eps && std::signbit(alt[i]) != std::signbit(selected[i])) {
                flags[i] = true;
            }
        }
    }
    return flags;
}

// Shared tail of the solver and the oracle: gather equal fits, pick the branch.
inline PhaseSolution finish_solution(std::vector<LocalFit> fits, const std::array<double, 4>& measured,
                                     const PhaseConfig& reference, const InversionOptions& opts) {
    std::sort(fits.begin(), fits.end(),
              [](const LocalFit& a, const LocalFit& b) { return a.residual < b.residual; });
    const LocalFit& best = fits.front();
    const double scale = 16.0 * best.r0;
    const double threshold =
        std::max(opts.ambiguity_factor * best.residual, 1e-10 * scale);

    std::vector<PhaseConfig> alternatives;
    for (const auto& f : fits) {
        if (f.residual > threshold) break;
        for (const auto& image : symmetry_orbit(PhaseConfig(f.phi))) {
            if (rms_residual(image.values(), f.r0, measured) <= threshold) {
                add_unique(alternatives, image);
            }
        }
    }

    PhaseSolution sol;
    const std::size_t pick = select_branch(alternatives, reference);
    sol.phases = alternatives[pick];
    sol.r0 = best.r0;
    sol.residual = rms_residual(sol.phases.values(), sol.r0, measured);
    sol.converged = sol.residual <= opts.residual_tolerance * scale;
    sol.sign_ambiguous = sign_flags(sol.phases, alternatives);
    sol.alternatives = std::move(alternatives);
    return sol;
}

inline double resolve_r0(const CoincidenceRates& rates,
                         const std::optional<CalibrationRecord>& calibration) {
    if (calibration) return calibration->r0_estimate;
    if (rates.r0) return *rates.r0;
    throw CalibrationError("r0 unknown: supply a calibration or solve for r0");
}

}  // namespace detail

// Multi-start damped least squares over a lattice of starting phases.
inline PhaseSolution invert_rates(const CoincidenceRates& rates,
                                  const std::optional<CalibrationRecord>& calibration,
                                  bool solve_r0, const InversionOptions& opts = {}) {
    rates.validate();
    if (opts.lattice < 1) throw InvalidArgument("lattice needs at least one start per axis");
    const auto measured = rates.values();

    double r0_start;
    if (solve_r0) {
        // Any r0 seed works; the calibration or the AB-dominated zero-phase
        // scale is a reasonable one.
        if (calibration) {
            r0_start = calibration->r0_estimate;
        } else {
            const double total = measured[0] + measured[1] + measured[2] + measured[3];
            r0_start = total > 0.0 ? total / 16.0 : 1.0;
        }
    } else {
        r0_start = detail::resolve_r0(rates, calibration);
    }

    const PhaseConfig reference =
        opts.reference ? *opts.reference : (calibration ? calibration->branch_reference : PhaseConfig{});

    std::vector<detail::LocalFit> fits;
    const int L = opts.lattice;
    const double spacing = 2.0 * std::numbers::pi / L;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            for (int k = 0; k < L; ++k) {
                const std::array<double, 3> start{-std::numbers::pi + (i + 0.5) * spacing,
                                                  -std::numbers::pi + (j + 0.5) * spacing,
                                                  -std::numbers::pi + (k + 0.5) * spacing};
                fits.push_back(detail::levenberg_marquardt(start, r0_start, solve_r0, measured,
                                                           opts.max_iterations));
            }
        }
    }
    // The reference itself is a natural start when tracking.
    fits.push_back(detail::levenberg_marquardt(reference.values(), r0_start, solve_r0, measured,
                                               opts.max_iterations));
    return detail::finish_solution(std::move(fits), measured, reference, opts);
}

// Invert a time-ordered sequence, seeding each branch choice from the
// previous solution.
inline std::vector<PhaseSolution> track_rates(std::span<const CoincidenceRates> sequence,
                                              const CalibrationRecord& calibration,
                                              bool solve_r0, InversionOptions opts = {}) {
    std::vector<PhaseSolution> out;
    out.reserve(sequence.size());
    if (!opts.reference) opts.reference = calibration.branch_reference;
    for (const auto& rates : sequence) {
        out.push_back(invert_rates(rates, calibration, solve_r0, opts));
        opts.reference = out.back().phases;
    }
    return out;
}

struct SpecialCaseSolution {
    double phi0 = 0.0;
    double phi1 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    // Both roots of Lambda2 (1 + c^2) = 2 c; their product is 1.
    std::array<double, 2> cos_phi1_candidates{0.0, 0.0};
    double cos_phi1 = 0.0;
};

// Closed-form inversion for phi1 = phi2:
//   cos(2 phi0) = Lambda1 = (R_AD - R_AC) / (R_AD + R_AC)
//   cos(phi1)   = (1 +- sqrt(1 - Lambda2^2)) / Lambda2,
//   Lambda2     = (R_AB - R_CD) / (R_AB + R_CD) = 2 cos(phi1) / (1 + cos^2(phi1)).
// Returns phi0 in [0, pi/2] and phi1 in [0, pi].
inline SpecialCaseSolution invert_special_case(const CoincidenceRates& rates) {
    rates.validate();
    constexpr double eps = 1e-12;
    const double sum_a = rates.r_ad + rates.r_ac;
    const double sum_b = rates.r_ab + rates.r_cd;
    const double scale = std::max({rates.r_ac, rates.r_ad, rates.r_ab, rates.r_cd, 1e-300});
    if (sum_a <= eps * scale) throw InversionError("Lambda1 undefined: R_AD + R_AC = 0");
    if (sum_b <= eps * scale) throw InversionError("Lambda2 undefined: R_AB + R_CD = 0");

    SpecialCaseSolution s;
    s.lambda1 = (rates.r_ad - rates.r_ac) / sum_a;
    s.lambda2 = (rates.r_ab - rates.r_cd) / sum_b;
    if (std::abs(s.lambda1) > 1.0 + 1e-9) throw InversionError("|Lambda1| > 1: data not phi1 = phi2");
    if (std::abs(s.lambda2) > 1.0 + 1e-9) throw InversionError("|Lambda2| > 1: data not phi1 = phi2");
    const double l1 = std::clamp(s.lambda1, -1.0, 1.0);
    const double l2 = std::clamp(s.lambda2, -1.0, 1.0);
    s.phi0 = 0.5 * std::acos(l1);

    if (std::abs(l2) < 1e-15) {
        s.cos_phi1_candidates = {0.0, std::numeric_limits<double>::infinity()};
        s.cos_phi1 = 0.0;
    } else {
        const double root = std::sqrt(std::max(0.0, 1.0 - l2 * l2));
        // (1 - root) / l2 written cancellation-free.
        const double small = l2 / (1.0 + root);
        s.cos_phi1_candidates = {small, (1.0 + root) / l2};
        s.cos_phi1 = std::abs(small) <= 1.0 ? small : s.cos_phi1_candidates[1];
        if (std::abs(s.cos_phi1) > 1.0 + 1e-12) {
            throw InversionError("no |cos phi1| <= 1 candidate: data not phi1 = phi2");
        }
    }
    s.phi1 = std::acos(std::clamp(s.cos_phi1, -1.0, 1.0));
    return s;
}

// Independent oracle: exhaustive grid over (-pi, pi]^3 at spacing <= grid_step,
// every grid-local minimum refined by a derivative-free compass search.
inline PhaseSolution brute_force_invert(const CoincidenceRates& rates,
                                        const CalibrationRecord& calibration, double grid_step,
                                        const InversionOptions& opts = {}) {
    rates.validate();
    if (!(grid_step > 0.0)) throw InvalidArgument("grid step must be positive");
    const auto measured = rates.values();
    const double r0 = calibration.r0_estimate;
    const int n = static_cast<int>(std::ceil(2.0 * std::numbers::pi / grid_step));
    const double h = 2.0 * std::numbers::pi / n;
    const auto node = [&](int k) { return -std::numbers::pi + h * (k + 1); };

    // cos of the branch phase depends on 2i + j - k only.
    std::vector<double> sin_t(n), cos_t(n), cos_theta(4 * n);
    for (int k = 0; k < n; ++k) {
        sin_t[k] = std::sin(node(k));
        cos_t[k] = std::cos(node(k));
    }
    const double theta0 = 2.0 * node(0) + node(0) - node(0);
    for (int m = 0; m < 4 * n; ++m) cos_theta[m] = std::cos(theta0 + h * (m - n));

    std::vector<double> cost(static_cast<std::size_t>(n) * n * n);
    const auto index = [n](int i, int j, int k) {
        return (static_cast<std::size_t>(i) * n + j) * n + k;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double s1 = sin_t[j], c1 = cos_t[j];
            for (int k = 0; k < n; ++k) {
                const double s2 = sin_t[k], c2 = cos_t[k];
                const double ct = cos_theta[2 * i + j - k + n];
                const double ac = s1 * s1 + s2 * s2 - 2 * s1 * s2 * ct;
                const double ad = s1 * s1 + s2 * s2 + 2 * s1 * s2 * ct;
                const double ab = (c1 + 1) * (c1 + 1) + (c2 + 1) * (c2 + 1) + 2 * (c1 + 1) * (c2 + 1) * ct;
                const double cd = (c1 - 1) * (c1 - 1) + (c2 - 1) * (c2 - 1) + 2 * (c1 - 1) * (c2 - 1) * ct;
                const double d0 = r0 * ac - measured[0], d1 = r0 * ad - measured[1];
                const double d2 = r0 * ab - measured[2], d3 = r0 * cd - measured[3];
                cost[index(i, j, k)] = d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
            }
        }
    }

    const auto wrap = [n](int v) { return (v % n + n) % n; };
    const auto refine = [&](std::array<double, 3> p) {
        double f = detail::rms_residual(p, r0, measured);
        double step = h;
        while (step > 1e-13) {
            bool moved = false;
            for (int axis = 0; axis < 3; ++axis) {
                for (double dir : {1.0, -1.0}) {
                    auto q = p;
                    q[axis] += dir * step;
                    const double fq = detail::rms_residual(q, r0, measured);
                    if (fq < f) {
                        p = q;
                        f = fq;
                        moved = true;
                    }
                }
            }
            if (!moved) step *= 0.5;
        }
        for (double& v : p) v = wrap_phase(v);
        return detail::LocalFit{p, r0, f};
    };

    std::vector<detail::LocalFit> fits;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                const double c = cost[index(i, j, k)];
                const bool local_min =
                    c <= cost[index(wrap(i + 1), j, k)] && c <= cost[index(wrap(i - 1), j, k)] &&
                    c <= cost[index(i, wrap(j + 1), k)] && c <= cost[index(i, wrap(j - 1), k)] &&
                    c <= cost[index(i, j, wrap(k + 1))] && c <= cost[index(i, j, wrap(k - 1))];
                if (local_min) fits.push_back(refine({node(i), node(j), node(k)}));
            }
        }
    }

    // Keep only the oracle's own minima: no symmetry images.
    std::sort(fits.begin(), fits.end(),
              [](const auto& a, const auto& b) { return a.residual < b.residual; });
    const double scale = 16.0 * r0;
    const double threshold = std::max(opts.ambiguity_factor * fits.front().residual, 1e-10 * scale);
    std::vector<PhaseConfig> minima;
    for (const auto& f : fits) {
        if (f.residual > threshold) break;
        detail::add_unique(minima, PhaseConfig(f.phi), 1e-5);
    }
    const PhaseConfig reference = opts.reference ? *opts.reference : calibration.branch_reference;

    PhaseSolution sol;
    const std::size_t pick = detail::select_branch(minima, reference);
    sol.phases = minima[pick];
    sol.r0 = r0;
    sol.residual = detail::rms_residual(sol.phases.values(), r0, measured);
    sol.converged = sol.residual <= opts.residual_tolerance * scale;
    sol.sign_ambiguous = detail::sign_flags(sol.phases, minima);
    sol.alternatives = std::move(minima);
    return sol;
}

}  // namespace grover
