#pragma once

// Command-line front end.  Kept in a header so tests can drive it in-process;
// tools/grover_cli.cpp only forwards argv.
//
// Exit codes: 0 ok, 2 usage, 3 numerical/quadrature, 4 inversion, 5 geometry.

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "grover/grover.hpp"

namespace grover::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kInversion = 4, kGeometry = 5 };

// Raised for bad values the parser itself cannot catch.
struct UsageError : Error {
    using Error::Error;
};

enum class Format { csv, pretty };

// Round-trip precision, scientific notation; -0 prints as 0.
inline std::string sci(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

inline std::string short_number(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
    return std::string(buf, res.ptr);
}

inline std::string number(double v, Format f) { return f == Format::csv ? sci(v) : short_number(v); }

inline double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
        throw UsageError(what + ": not a finite number: '" + text + "'");
    }
    return v;
}

inline std::vector<double> parse_list(const std::string& text, char sep, const std::string& what) {
    std::vector<double> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        out.push_back(parse_double(text.substr(start, pos - start), what));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

template <std::size_t N>
std::array<double, N> parse_fixed(const std::string& text, const std::string& what) {
    const auto v = parse_list(text, ',', what);
    if (v.size() != N) throw UsageError(what + ": expected " + std::to_string(N) + " comma-separated values");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

inline ScanRange parse_range(const std::string& text) {
    const auto v = parse_list(text, ':', "--range");
    if (v.size() != 3) throw UsageError("--range: expected min:max:step");
    if (!(v[0] < v[1]) || !(v[2] > 0.0)) throw UsageError("--range: need min < max and step > 0");
    return {v[0], v[1], v[2]};
}

struct SpectrumSpec {
    SpectrumKind kind = SpectrumKind::sinc;
    double bandwidth = 1.0;
    double center = 0.0;
};

// kind[:bandwidth[:center]]
inline SpectrumSpec parse_spectrum(const std::string& text) {
    SpectrumSpec s;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    if (name == "sinc") {
        s.kind = SpectrumKind::sinc;
    } else if (name == "gaussian") {
        s.kind = SpectrumKind::gaussian;
    } else if (name == "rectangular") {
        s.kind = SpectrumKind::rectangular;
    } else {
        throw UsageError("--spectrum: unknown kind '" + name + "'");
    }
    if (colon != std::string::npos) {
        const auto rest = parse_list(text.substr(colon + 1), ':', "--spectrum");
        if (rest.size() > 2) throw UsageError("--spectrum: expected kind[:bandwidth[:center]]");
        s.bandwidth = rest[0];
        if (rest.size() == 2) s.center = rest[1];
        if (!(s.bandwidth > 0.0)) throw UsageError("--spectrum: bandwidth must be positive");
    }
    return s;
}

inline std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line;
}

// Header row plus value rows; pretty mode aligns "key = value" when there
// is a single row.
inline void emit_table(std::ostream& os, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows, Format f) {
    if (f == Format::pretty && rows.size() == 1) {
        std::size_t width = 0;
        for (const auto& h : header) width = std::max(width, h.size());
        for (std::size_t i = 0; i < header.size(); ++i) {
            os << header[i] << std::string(width - header[i].size(), ' ') << " = " << rows[0][i] << '\n';
        }
        return;
    }
    os << join(header) << '\n';
    for (const auto& r : rows) os << join(r) << '\n';
}

// --- calibration files --------------------------------------------------
//
//   r0 = 1.0e+00
//   zero_phase_rates = 0,0,16,0
//   branch_reference = 0,0,0
//   branch_tag = zero-phase

inline void save_calibration(const std::string& path, const CalibrationRecord& rec) {
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write calibration file '" + path + "'");
    const auto z = rec.zero_phase_rates.values();
    const auto b = rec.branch_reference.values();
    os << "r0 = " << sci(rec.r0_estimate) << '\n';
    os << "zero_phase_rates = " << sci(z[0]) << ',' << sci(z[1]) << ',' << sci(z[2]) << ',' << sci(z[3]) << '\n';
    os << "branch_reference = " << sci(b[0]) << ',' << sci(b[1]) << ',' << sci(b[2]) << '\n';
    os << "branch_tag = " << rec.branch_tag << '\n';
}

inline CalibrationRecord load_calibration(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read calibration file '" + path + "'");
    CalibrationRecord rec;
    bool have_r0 = false;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("calibration file: expected key = value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        if (key == "r0") {
            rec.r0_estimate = parse_double(value, "calibration r0");
            have_r0 = true;
        } else if (key == "zero_phase_rates") {
            rec.zero_phase_rates = CoincidenceRates::from_values(parse_fixed<4>(value, "zero_phase_rates"));
        } else if (key == "branch_reference") {
            rec.branch_reference = PhaseConfig(parse_fixed<3>(value, "branch_reference"));
        } else if (key == "branch_tag") {
            rec.branch_tag = value;
        } else {
            throw UsageError("calibration file: unknown key '" + key + "'");
        }
    }
    if (!have_r0 || !(rec.r0_estimate > 0.0)) throw UsageError("calibration file: missing positive r0");
    return rec;
}

// Rates file: optional header line, then r_ac,r_ad,r_ab,r_cd per row.
inline std::vector<CoincidenceRates> load_rates_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read rates file '" + path + "'");
    std::vector<CoincidenceRates> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (first && line.rfind("r_ac", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        out.push_back(CoincidenceRates::from_values(parse_fixed<4>(line, "rates file")));
    }
    if (out.empty()) throw UsageError("rates file '" + path + "' has no rows");
    return out;
}

// --- subcommand options ---------------------------------------------------

struct HomScanOptions {
    double phi = std::numbers::pi / 2;
    std::string scan = "tau0";
    std::string range = "-5:5:0.05";
    double fixed = 0.0;
    std::string spectrum = "sinc";
    double window = 8.0;
    std::size_t panels = 2048;
    double refinement_tolerance = 1e-4;
    bool physical = false;
};

struct MzOptions {
    std::string phi = "0,0,0";
    double r0 = 1.0;
    std::string mode = "closed-form";
};

struct CalibrationInput {
    std::string calibration_file;
    std::string zero_phase_rates;
    std::optional<double> r0;
    double calibration_tolerance = 0.01;
};

struct InvertOptions {
    CalibrationInput cal;
    std::string rates;
    std::string rates_file;
    std::string save_calibration;
    std::string reference;
    bool solve_r0 = false;
    bool special_case = false;
    bool alternatives = false;
    std::optional<double> brute_force_step;
    double tolerance = 1e-6;
    int lattice = 8;
};

struct SagnacOptions {
    CalibrationInput cal;
    std::string areas = "1,1,1";
    double wavelength = 1550e-9;
    double radius = 0.0;
    std::string omega;
    std::string rates;
    std::string phases;
    double r0 = 1.0;
};

inline std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty() || path == "-") return fallback;
    file.open(path, std::ios::binary);
    if (!file) throw UsageError("cannot write '" + path + "'");
    return file;
}

// Resolves the calibration from (in order) a calibration file, zero-phase
// rates, or a bare r0.  Returns nullopt when none was given.
inline std::optional<CalibrationRecord> resolve_calibration(const CalibrationInput& in) {
    if (!in.calibration_file.empty()) return load_calibration(in.calibration_file);
    if (!in.zero_phase_rates.empty()) {
        return calibrate(CoincidenceRates::from_values(parse_fixed<4>(in.zero_phase_rates, "--zero-phase-rates")),
                         in.calibration_tolerance);
    }
    if (in.r0) {
        if (!(*in.r0 > 0.0)) throw UsageError("--r0 must be positive");
        CalibrationRecord rec;
        rec.r0_estimate = *in.r0;
        rec.zero_phase_rates = CoincidenceRates::from_values({0, 0, 16.0 * *in.r0, 0});
        rec.branch_tag = "r0";
        return rec;
    }
    return std::nullopt;
}

inline int cmd_hom_scan(const HomScanOptions& o, Format f, std::ostream& out) {
    ScanVariable var;
    if (o.scan == "tau0") {
        var = ScanVariable::tau0;
    } else if (o.scan == "dtau") {
        var = ScanVariable::dtau;
    } else {
        throw UsageError("--scan must be tau0 or dtau");
    }
    const ScanRange range = parse_range(o.range);
    const SpectrumSpec spec = parse_spectrum(o.spectrum);
    if (!(o.window > 0.0)) throw UsageError("--window must be positive");
    if (o.panels < 2 || o.panels % 2 != 0) throw UsageError("--panels must be even and at least 2");

    // Physical mode: delays in seconds, bandwidth and center in rad/s.  The
    // integrals always run in bandwidth units.
    const double to_units = o.physical ? spec.bandwidth : 1.0;
    const auto profile = SpectralProfile::make(spec.kind, o.physical ? 1.0 : spec.bandwidth,
                                               o.physical ? spec.center / spec.bandwidth : spec.center,
                                               spec.kind == SpectrumKind::rectangular ? 1.0 : o.window);
    const ScanRange scaled{range.min * to_units, range.max * to_units, range.step * to_units};
    const double phi = wrap_phase(o.phi);
    const auto points = hom_scan(phi, var, o.fixed * to_units, scaled, profile, {o.panels, o.refinement_tolerance});

    std::vector<std::vector<std::string>> rows;
    rows.reserve(points.size());
    for (const auto& p : points) {
        rows.push_back({number(p.delay / to_units, f), number(p.probability, f), number(phi, f), o.scan});
    }
    out << join({"delay", "probability", "phi", "scan_var"}) << '\n';
    for (const auto& r : rows) out << join(r) << '\n';
    return kOk;
}

inline int cmd_mz(const MzOptions& o, Format f, std::ostream& out) {
    const PhaseConfig phases(parse_fixed<3>(o.phi, "--phi"));
    if (!(o.r0 > 0.0)) throw UsageError("--r0 must be positive");
    const auto closed = grover_mz_rates(phases, o.r0);
    std::vector<std::string> header{"r_ac", "r_ad", "r_ab", "r_cd"};
    std::vector<std::string> row;
    for (double v : closed.values()) row.push_back(number(v, f));
    if (o.mode == "simulate") {
        const auto dist = simulate_grover_mz(phases);
        const auto sim = rates_from_distribution(dist, o.r0);
        row.clear();
        for (double v : sim.values()) row.push_back(number(v, f));
        for (const auto& [key, p] : dist.outcomes()) {
            header.push_back("p_" + key);
            row.push_back(number(p, f));
        }
    } else if (o.mode != "closed-form") {
        throw UsageError("--mode must be closed-form or simulate");
    }
    if (f == Format::pretty && o.mode == "closed-form") {
        out << join(row) << '\n';
        return kOk;
    }
    emit_table(out, header, {row}, f);
    return kOk;
}

inline std::vector<std::string> solution_row(const PhaseSolution& s, Format f) {
    const auto p = s.phases.values();
    return {number(p[0], f),
            number(p[1], f),
            number(p[2], f),
            number(s.r0, f),
            number(s.residual, f),
            s.converged ? "1" : "0",
            s.sign_ambiguous[0] ? "1" : "0",
            s.sign_ambiguous[1] ? "1" : "0",
            s.sign_ambiguous[2] ? "1" : "0",
            std::to_string(s.alternatives.size())};
}

inline const std::vector<std::string> kSolutionHeader{
    "phi0", "phi1", "phi2", "r0", "residual", "converged", "ambiguous_phi0", "ambiguous_phi1",
    "ambiguous_phi2", "alternatives"};

inline int cmd_invert(const InvertOptions& o, Format f, std::ostream& out, std::ostream& err) {
    if (o.rates.empty() == o.rates_file.empty()) throw UsageError("give exactly one of --rates or --rates-file");
    const auto calibration = resolve_calibration(o.cal);
    if (!o.save_calibration.empty()) {
        if (!calibration) throw UsageError("--save-calibration needs --zero-phase-rates or --r0");
        save_calibration(o.save_calibration, *calibration);
    }

    if (o.special_case) {
        if (o.rates.empty()) throw UsageError("--special-case takes --rates");
        const auto s = invert_special_case(CoincidenceRates::from_values(parse_fixed<4>(o.rates, "--rates")));
        emit_table(out, {"phi0", "phi1", "lambda1", "lambda2", "cos_phi1"},
                   {{number(s.phi0, f), number(s.phi1, f), number(s.lambda1, f), number(s.lambda2, f),
                     number(s.cos_phi1, f)}},
                   f);
        return kOk;
    }

    if (!calibration && !o.solve_r0) {
        throw UsageError("need --calibration, --zero-phase-rates, --r0 or --solve-r0");
    }
    InversionOptions opts;
    opts.residual_tolerance = o.tolerance;
    opts.lattice = o.lattice;
    if (!o.reference.empty()) opts.reference = PhaseConfig(parse_fixed<3>(o.reference, "--reference"));

    std::vector<PhaseSolution> solutions;
    std::vector<std::array<double, 4>> measured;
    if (!o.rates_file.empty()) {
        const auto seq = load_rates_file(o.rates_file);
        for (const auto& r : seq) measured.push_back(r.values());
        CalibrationRecord cal = calibration ? *calibration : CalibrationRecord{};
        if (!calibration) cal.r0_estimate = 1.0;
        solutions = track_rates(seq, cal, o.solve_r0, opts);
    } else {
        const auto rates = CoincidenceRates::from_values(parse_fixed<4>(o.rates, "--rates"));
        measured.push_back(rates.values());
        solutions.push_back(invert_rates(rates, calibration, o.solve_r0, opts));
        if (o.brute_force_step) {
            if (!calibration) throw UsageError("--brute-force-check needs a calibration");
            const auto oracle = brute_force_invert(rates, *calibration, *o.brute_force_step, opts);
            const double d = detail::wrapped_distance(oracle.phases, solutions.back().phases);
            err << "brute-force oracle: branch distance " << sci(d) << '\n';
            if (d > 1e-6) {
                err << "error: solver and grid oracle chose different branches\n";
                return kInversion;
            }
        }
    }

    std::vector<std::string> header = kSolutionHeader;
    std::vector<std::vector<std::string>> rows;
    if (o.alternatives) header.emplace_back("selected");
    for (const auto& s : solutions) {
        rows.push_back(solution_row(s, f));
        if (!o.alternatives) continue;
        rows.back().emplace_back("1");
        for (const auto& alt : s.alternatives) {
            if (detail::wrapped_distance(alt, s.phases) < 1e-12) continue;
            PhaseSolution copy = s;
            copy.phases = alt;
            copy.residual = detail::rms_residual(alt.values(), s.r0, measured[&s - solutions.data()]);
            rows.push_back(solution_row(copy, f));
            rows.back().emplace_back("0");
        }
    }
    if (f == Format::pretty && rows.size() > 1) f = Format::csv;
    emit_table(out, header, rows, f);
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        if (!solutions[i].converged) {
            err << "error: residual " << sci(solutions[i].residual) << " exceeds tolerance (row " << i << ")\n";
            return kInversion;
        }
    }
    return kOk;
}

inline int cmd_sagnac(const SagnacOptions& o, Format f, std::ostream& out, std::ostream& err) {
    const auto a = parse_fixed<3>(o.areas, "--areas");
    const SagnacGeometry g{a[0], a[1], a[2], o.wavelength, o.radius};
    g.validate();
    const int modes = !o.omega.empty() + !o.rates.empty() + !o.phases.empty();
    if (modes != 1) throw UsageError("give exactly one of --omega, --rates or --phases");

    if (!o.omega.empty()) {
        const auto w = parse_fixed<3>(o.omega, "--omega");
        const RotationRates rates{w[0], w[1], w[2]};
        for (const auto& msg : validity_warnings(rates, g)) err << "warning: " << msg << '\n';
        if (!(o.r0 > 0.0)) throw UsageError("--r0 must be positive");
        const auto axis = axis_phases(rates, g);
        const auto phi = interferometer_phases(rates, g);
        const auto predicted = grover_mz_rates(PhaseConfig(phi), o.r0).values();
        std::vector<std::string> header{"phi_x", "phi_y", "phi_z", "phi0", "phi1", "phi2",
                                        "r_ac", "r_ad", "r_ab", "r_cd"};
        std::vector<std::string> row;
        for (double v : axis) row.push_back(number(v, f));
        for (double v : phi) row.push_back(number(v, f));
        for (double v : predicted) row.push_back(number(v, f));
        if (g.radius > 0.0) {
            for (const char* n : {"dt_x", "dt_y", "dt_z"}) header.emplace_back(n);
            for (int i = 0; i < 3; ++i) row.push_back(number(exact_time_delay(a[i], g.radius, w[i]), f));
        }
        emit_table(out, header, {row}, f);
        return kOk;
    }

    const std::vector<std::string> header{"omega_x", "omega_y", "omega_z", "ambiguous_x",
                                          "ambiguous_y", "ambiguous_z", "candidates"};
    if (!o.phases.empty()) {
        const auto r = rotation_from_phase_values(parse_fixed<3>(o.phases, "--phases"), g);
        emit_table(out, header,
                   {{number(r.omega_x, f), number(r.omega_y, f), number(r.omega_z, f), "0", "0", "0", "1"}}, f);
        return kOk;
    }

    const auto calibration = resolve_calibration(o.cal);
    if (!calibration) throw UsageError("--rates needs --calibration, --zero-phase-rates or --r0");
    const auto rec = reconstruct_rotation(CoincidenceRates::from_values(parse_fixed<4>(o.rates, "--rates")),
                                          *calibration, g);
    const auto& r = rec.rates;
    emit_table(out, header,
               {{number(r.omega_x, f), number(r.omega_y, f), number(r.omega_z, f),
                 rec.direction_ambiguous[0] ? "1" : "0", rec.direction_ambiguous[1] ? "1" : "0",
                 rec.direction_ambiguous[2] ? "1" : "0", std::to_string(rec.candidates.size())}},
               f);
    if (!rec.phases.converged) {
        err << "error: phase inversion did not converge\n";
        return kInversion;
    }
    return kOk;
}

inline void add_calibration_options(CLI::App* sub, CalibrationInput& c) {
    sub->add_option("--calibration", c.calibration_file, "Calibration file written by --save-calibration");
    sub->add_option("--zero-phase-rates", c.zero_phase_rates, "Calibrate from zero-phase rates R_AC,R_AD,R_AB,R_CD");
    sub->add_option("--r0", c.r0, "Known single-pair rate scale");
    sub->add_option("--calibration-tolerance", c.calibration_tolerance,
                    "Allowed stray zero-phase rate, relative to R_AB")
        ->capture_default_str();
}

// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grover-coupler interferometry toolkit", "grover-cli"};
    app.set_config("--config", "", "INI/TOML file; [subcommand] sections; flags win over file values");
    app.require_subcommand(1);
    app.fallthrough();  // lets --config follow the subcommand

    // Per subcommand, so one config section cannot leak into another.
    std::map<std::string, std::string> format_names, output_paths;
    const auto add_common = [&](CLI::App* sub) {
        sub->configurable();
        auto& format_name = format_names[sub->get_name()];
        format_name = "csv";
        sub->add_option("--format", format_name, "csv or pretty")
            ->check(CLI::IsMember({"csv", "pretty"}))
            ->capture_default_str();
        sub->add_option("-o,--output", output_paths[sub->get_name()], "Output file (default stdout)");
    };

    HomScanOptions hom;
    auto* hom_cmd = app.add_subcommand("hom-scan", "Coincidence probability versus delay");
    add_common(hom_cmd);
    hom_cmd->add_option("--phi", hom.phi, "Internal phase (rad)")->capture_default_str();
    hom_cmd->add_option("--scan", hom.scan, "tau0 or dtau")->capture_default_str();
    hom_cmd->add_option("--range", hom.range, "min:max:step")->capture_default_str();
    hom_cmd->add_option("--fixed", hom.fixed, "Value of the delay not scanned")->capture_default_str();
    hom_cmd->add_option("--spectrum", hom.spectrum, "kind[:bandwidth[:center]], kind = sinc|gaussian|rectangular")
        ->capture_default_str();
    hom_cmd->add_option("--window", hom.window, "Frequency half-window in bandwidths")->capture_default_str();
    hom_cmd->add_option("--panels", hom.panels, "Simpson panels (even)")->capture_default_str();
    hom_cmd->add_option("--refinement-tolerance", hom.refinement_tolerance, "Allowed change on grid doubling")
        ->capture_default_str();
    hom_cmd->add_flag("--physical", hom.physical, "Delays in seconds, bandwidth and center in rad/s");

    MzOptions mz;
    auto* mz_cmd = app.add_subcommand("mz", "Grover Mach-Zehnder coincidence rates");
    add_common(mz_cmd);
    mz_cmd->add_option("--phi", mz.phi, "phi0,phi1,phi2 (rad)")->capture_default_str();
    mz_cmd->add_option("--r0", mz.r0, "Single-pair rate scale")->capture_default_str();
    mz_cmd->add_option("--mode", mz.mode, "closed-form or simulate")->capture_default_str();

    InvertOptions inv;
    auto* inv_cmd = app.add_subcommand("invert", "Recover phases from coincidence rates");
    add_common(inv_cmd);
    add_calibration_options(inv_cmd, inv.cal);
    inv_cmd->add_option("--rates", inv.rates, "R_AC,R_AD,R_AB,R_CD");
    inv_cmd->add_option("--rates-file", inv.rates_file, "Time-ordered rates, one row per sample (tracks branches)");
    inv_cmd->add_option("--save-calibration", inv.save_calibration, "Write the calibration record to a file");
    inv_cmd->add_option("--reference", inv.reference, "Branch reference phi0,phi1,phi2");
    inv_cmd->add_flag("--solve-r0", inv.solve_r0, "Fit r0 together with the phases");
    inv_cmd->add_flag("--special-case", inv.special_case, "Closed form for phi1 = phi2 data");
    inv_cmd->add_flag("--alternatives", inv.alternatives, "Also list every equal-fit phase triple");
    inv_cmd->add_option("--brute-force-check", inv.brute_force_step, "Cross-check with a grid search of this step");
    inv_cmd->add_option("--tolerance", inv.tolerance, "Residual tolerance relative to 16 r0")->capture_default_str();
    inv_cmd->add_option("--lattice", inv.lattice, "Starts per phase axis")->capture_default_str();

    SagnacOptions sag;
    auto* sag_cmd = app.add_subcommand("sagnac", "Three-axis rotation sensing");
    add_common(sag_cmd);
    add_calibration_options(sag_cmd, sag.cal);
    sag_cmd->add_option("--areas", sag.areas, "Loop areas A_x,A_y,A_z (m^2)")->capture_default_str();
    sag_cmd->add_option("--wavelength", sag.wavelength, "Wavelength (m)")->capture_default_str();
    sag_cmd->add_option("--radius", sag.radius, "Loop radius for the exact delay (m)")->capture_default_str();
    sag_cmd->add_option("--omega", sag.omega, "Forward: rotation rates w_x,w_y,w_z (rad/s)");
    sag_cmd->add_option("--phases", sag.phases, "Inverse: interferometer phases phi0,phi1,phi2");
    sag_cmd->add_option("--rates", sag.rates, "Inverse: coincidence rates R_AC,R_AD,R_AB,R_CD");
    sag_cmd->add_option("--rate-scale", sag.r0, "r0 for predicted rates in forward mode")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        // Config sections also mark their subcommands as parsed; run only
        // the one named on the command line.
        std::string chosen;
        for (int i = 1; i < argc && chosen.empty(); ++i) {
            for (const auto* sub : {hom_cmd, mz_cmd, inv_cmd, sag_cmd}) {
                if (sub->get_name() == argv[i]) chosen = argv[i];
            }
        }
        const Format fmt = format_names[chosen] == "pretty" ? Format::pretty : Format::csv;
        std::ofstream file;
        std::ostream& dest = open_output(output_paths[chosen], file, out);
        int code = kOk;
        if (chosen == "hom-scan") code = cmd_hom_scan(hom, fmt, dest);
        if (chosen == "mz") code = cmd_mz(mz, fmt, dest);
        if (chosen == "invert") code = cmd_invert(inv, fmt, dest, err);
        if (chosen == "sagnac") code = cmd_sagnac(sag, fmt, dest, err);
        dest.flush();
        return code;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const QuadratureError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const NotNormalized& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const CalibrationError& e) {
        err << "inversion error: " << e.what() << '\n';
        return kInversion;
    } catch (const InversionError& e) {
        err << "inversion error: " << e.what() << '\n';
        return kInversion;
    } catch (const GeometryError& e) {
        err << "geometry error: " << e.what() << '\n';
        return kGeometry;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    }
}

}  // namespace grover::cli
