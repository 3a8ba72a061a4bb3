#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "grover/cli.hpp"

using namespace grover;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "grover-cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::vector<double> numbers_in(const std::string& row) {
    std::vector<double> out;
    std::istringstream is(row);
    for (std::string cell; std::getline(is, cell, ',');) {
        try {
            out.push_back(std::stod(cell));
        } catch (...) {
            out.push_back(NAN);
        }
    }
    return out;
}

// "key = value" lines from pretty output.
double pretty_value(const std::string& text, const std::string& key) {
    for (const auto& l : lines(text)) {
        if (l.rfind(key + " ", 0) == 0) return std::stod(l.substr(l.find('=') + 1));
    }
    ADD_FAILURE() << "missing key " << key << " in\n" << text;
    return NAN;
}

class TempDir {
public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("grover-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content = "") const {
        const auto p = (path_ / name).string();
        if (!content.empty()) std::ofstream(p) << content;
        return p;
    }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(GROVER_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(CliMz, ZeroPhaseExample) {
    const auto r = run({"mz", "--phi", "0,0,0", "--r0", "1", "--format", "pretty"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "0,0,16,0\n");

    const auto csv = run({"mz", "--phi", "0,0,0", "--r0", "1"});
    EXPECT_EQ(csv.out,
              "r_ac,r_ad,r_ab,r_cd\n"
              "0.0000000000000000e+00,0.0000000000000000e+00,1.6000000000000000e+01,0.0000000000000000e+00\n");
}

TEST(CliMz, QuarterTurnExample) {
    const auto r = run({"mz", "--phi", "0,1.5708,1.5708", "--r0", "1"});
    ASSERT_EQ(r.code, 0);
    const auto v = numbers_in(lines(r.out).at(1));
    const std::array<double, 4> expected{0, 4, 4, 4};
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(v[k], expected[k], 1e-4);
}

TEST(CliMz, SimulateModeSplitsPiBetweenABAndCD) {
    const auto r = run({"mz", "--phi", "0,3.14159,0", "--mode", "simulate", "--format", "pretty"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(pretty_value(r.out, "p_AB"), 0.25, 1e-9);
    EXPECT_NEAR(pretty_value(r.out, "p_CD"), 0.25, 1e-9);

    // Both modes agree after scaling.
    const auto closed = numbers_in(lines(run({"mz", "--phi", "0.4,-1.2,2.2", "--r0", "1.7"}).out).at(1));
    const auto sim = numbers_in(
        lines(run({"mz", "--phi", "0.4,-1.2,2.2", "--r0", "1.7", "--mode", "simulate"}).out).at(1));
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(sim[k], closed[k], 1e-9);
}

TEST(CliHomScan, DipPeakAndFlatCurves) {
    const auto dip = run({"hom-scan", "--phi", "1.5708", "--scan", "tau0", "--range", "-5:5:0.05"});
    ASSERT_EQ(dip.code, 0) << dip.err;
    const auto rows = lines(dip.out);
    ASSERT_EQ(rows.size(), 202u);
    EXPECT_EQ(rows[0], "delay,probability,phi,scan_var");
    const std::regex sci(R"(-?\d\.\d{16}e[+-]\d{2,3})");
    double min_p = 1.0, min_at = 99.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::istringstream is(rows[i]);
        std::string delay, p, phi, var;
        std::getline(is, delay, ',');
        std::getline(is, p, ',');
        std::getline(is, phi, ',');
        std::getline(is, var, ',');
        EXPECT_TRUE(std::regex_match(delay, sci)) << delay;
        EXPECT_TRUE(std::regex_match(p, sci)) << p;
        EXPECT_EQ(var, "tau0");
        if (std::stod(p) < min_p) {
            min_p = std::stod(p);
            min_at = std::stod(delay);
        }
    }
    EXPECT_LT(min_p, 1e-6);
    EXPECT_NEAR(min_at, 0.0, 1e-12);

    const auto peak = lines(run({"hom-scan", "--phi", "0", "--range", "-5:5:0.05"}).out);
    double max_p = 0.0;
    for (std::size_t i = 1; i < peak.size(); ++i) max_p = std::max(max_p, numbers_in(peak[i])[1]);
    EXPECT_GT(max_p, 1.0 - 1e-6);

    const auto flat = lines(run({"hom-scan", "--phi", "0.7854", "--range", "-5:5:0.05"}).out);
    for (std::size_t i = 1; i < flat.size(); ++i) EXPECT_NEAR(numbers_in(flat[i])[1], 0.5, 1e-4);
}

TEST(CliHomScan, PhysicalUnitsRescale) {
    // 1 ps delays with a 1e12 rad/s bandwidth are one bandwidth unit.
    const auto unitless = run({"hom-scan", "--range", "-2:2:0.5"});
    const auto physical = run({"hom-scan", "--physical", "--spectrum", "sinc:1e12", "--range", "-2e-12:2e-12:0.5e-12"});
    ASSERT_EQ(physical.code, 0) << physical.err;
    const auto a = lines(unitless.out), b = lines(physical.out);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 1; i < a.size(); ++i) {
        EXPECT_NEAR(numbers_in(a[i])[1], numbers_in(b[i])[1], 1e-12);
        EXPECT_NEAR(numbers_in(b[i])[0], numbers_in(a[i])[0] * 1e-12, 1e-24);
    }
}

TEST(CliHomScan, DeterministicOutputFiles) {
    TempDir dir;
    const auto a = dir.file("a.csv"), b = dir.file("b.csv");
    EXPECT_EQ(run_binary("hom-scan --phi 1.2 --scan dtau --range -3:3:0.1 -o " + a), 0);
    EXPECT_EQ(run_binary("hom-scan --phi 1.2 --scan dtau --range -3:3:0.1 -o " + b), 0);
    const auto first = slurp(a);
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(first, slurp(b));
    EXPECT_EQ(first, run({"hom-scan", "--phi", "1.2", "--scan", "dtau", "--range", "-3:3:0.1"}).out);
}

TEST(CliExitCodes, MapErrorsToDocumentedCodes) {
    EXPECT_EQ(run_binary("mz --phi 0,0,0"), 0);
    EXPECT_EQ(run_binary(""), 2);
    EXPECT_EQ(run_binary("mz --phi 0,0"), 2);
    EXPECT_EQ(run_binary("mz --no-such-flag"), 2);
    EXPECT_EQ(run_binary("hom-scan --range 1:0:0.1"), 2);
    EXPECT_EQ(run_binary("hom-scan --spectrum gaussian --panels 8 --range 0:1:0.5"), 3);
    EXPECT_EQ(run_binary("invert --rates 100,0,0,0 --r0 1"), 4);
    EXPECT_EQ(run_binary("invert --rates 0,0,16,0 --special-case"), 4);
    EXPECT_EQ(run_binary("invert --rates 0,0,16,0 --zero-phase-rates 1,0,16,0"), 4);
    EXPECT_EQ(run_binary("sagnac --areas 1,0,1 --phases 0.1,0.2,0.3"), 5);
    EXPECT_EQ(run_binary("invert --rates 0,0,16,0"), 2);
}

TEST(CliConfig, FlagBeatsFileBeatsDefault) {
    TempDir dir;
    const auto cfg = dir.file("run.ini",
                              "[mz]\n"
                              "phi = \"0,3.141592653589793,0\"\n"
                              "r0 = 2\n"
                              "mode = simulate\n"
                              "[hom-scan]\n"
                              "phi = 0\n"
                              "range = \"-1:1:0.5\"\n"
                              "spectrum = gaussian\n"
                              "[invert]\n"
                              "format = pretty\n");

    // Defaults: phi = 0,0,0, r0 = 1, closed form.
    EXPECT_EQ(run({"mz", "--format", "pretty"}).out, "0,0,16,0\n");

    const auto from_file = run({"--config", cfg, "mz", "--format", "pretty"});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    EXPECT_NEAR(pretty_value(from_file.out, "r_ab"), 8.0, 1e-9);          // r0 from file
    EXPECT_NEAR(pretty_value(from_file.out, "p_AB"), 0.25, 1e-9);         // mode and phi from file

    const auto r0_flag = run({"--config", cfg, "mz", "--r0", "1", "--format", "pretty"});
    EXPECT_NEAR(pretty_value(r0_flag.out, "r_ab"), 4.0, 1e-9);
    const auto phi_flag = run({"--config", cfg, "mz", "--phi", "0,0,0", "--format", "pretty"});
    EXPECT_NEAR(pretty_value(phi_flag.out, "r_ab"), 32.0, 1e-9);
    const auto mode_flag = run({"--config", cfg, "mz", "--mode", "closed-form"});
    EXPECT_EQ(lines(mode_flag.out).at(0), "r_ac,r_ad,r_ab,r_cd");  // [invert] format stays there
    const auto inv = run({"--config", cfg, "invert", "--rates", "0,0,16,0", "--r0", "1"});
    EXPECT_EQ(lines(inv.out).at(0).rfind("phi0 ", 0), 0u);

    // --config may also follow the subcommand.
    EXPECT_EQ(run({"mz", "--config", cfg, "--r0", "1", "--format", "pretty"}).out, r0_flag.out);

    const auto scan_file = lines(run({"--config", cfg, "hom-scan"}).out);
    ASSERT_EQ(scan_file.size(), 6u);
    EXPECT_NEAR(numbers_in(scan_file[3])[1], 1.0, 1e-9);  // phi = 0 peak
    // Gaussian envelope at tau0 = 1: p = 1/2 + exp(-1/2)/2.
    EXPECT_NEAR(numbers_in(scan_file[5])[1], 0.5 + 0.5 * std::exp(-0.5), 1e-9);
    const auto scan_flags = lines(run({"--config", cfg, "hom-scan", "--phi", "1.5707963267948966", "--range",
                                       "-1:1:1", "--spectrum", "sinc"})
                                      .out);
    ASSERT_EQ(scan_flags.size(), 4u);
    EXPECT_LT(numbers_in(scan_flags[2])[1], 1e-6);
}

TEST(CliInvert, RoundTripReportsTruthAmongAlternatives) {
    const PhaseConfig truth(0.3, 0.7, 1.1);
    const auto r = grover_mz_rates(truth, 1.0).values();
    std::string rates;
    for (int k = 0; k < 4; ++k) rates += (k ? "," : "") + cli::sci(r[k]);
    const auto out = run({"invert", "--rates", rates, "--r0", "1", "--alternatives"});
    ASSERT_EQ(out.code, 0) << out.err;
    const auto rows = lines(out.out);
    bool found = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto v = numbers_in(rows[i]);
        EXPECT_LT(v[4], 1e-8);
        found = found || detail::wrapped_distance(PhaseConfig(v[0], v[1], v[2]), truth) < 1e-6;
    }
    EXPECT_TRUE(found);
    EXPECT_EQ(rows.size(), 17u);
}

TEST(CliInvert, CalibrationFileRoundTripAndZeroPhaseInput) {
    TempDir dir;
    const auto cal = dir.file("cal.txt");
    const auto saved = run({"invert", "--zero-phase-rates", "0,0,32,0", "--rates", "0,0,32,0",
                            "--save-calibration", cal, "--format", "pretty"});
    ASSERT_EQ(saved.code, 0) << saved.err;
    EXPECT_NEAR(pretty_value(saved.out, "r0"), 2.0, 1e-15);

    const auto loaded = cli::load_calibration(cal);
    EXPECT_DOUBLE_EQ(loaded.r0_estimate, 2.0);
    EXPECT_DOUBLE_EQ(loaded.zero_phase_rates.r_ab, 32.0);

    const auto again = run({"invert", "--calibration", cal, "--rates", "0,0,32,0", "--format", "pretty"});
    ASSERT_EQ(again.code, 0);
    for (const char* k : {"phi0", "phi1", "phi2"}) EXPECT_NEAR(pretty_value(again.out, k), 0.0, 1e-6);
    EXPECT_EQ(run({"invert", "--calibration", dir.file("missing.txt"), "--rates", "0,0,1,0"}).code, 2);
}

TEST(CliInvert, SpecialCaseAndTracking) {
    const auto r = grover_mz_rates({0.2, std::numbers::pi / 3, std::numbers::pi / 3}, 1.0).values();
    std::string rates;
    for (int k = 0; k < 4; ++k) rates += (k ? "," : "") + cli::sci(r[k]);
    const auto sc = run({"invert", "--rates", rates, "--special-case", "--format", "pretty"});
    ASSERT_EQ(sc.code, 0) << sc.err;
    EXPECT_NEAR(pretty_value(sc.out, "phi0"), 0.2, 1e-9);
    EXPECT_NEAR(pretty_value(sc.out, "phi1"), std::numbers::pi / 3, 1e-9);
    EXPECT_NEAR(pretty_value(sc.out, "lambda1"), std::cos(0.4), 1e-9);

    TempDir dir;
    std::string table = "r_ac,r_ad,r_ab,r_cd\n";
    for (int k = 0; k < 5; ++k) {
        const auto v = grover_mz_rates({1.0 + 0.02 * k, 0.5 + 0.03 * k, 1.6}, 1.0).values();
        table += cli::sci(v[0]) + "," + cli::sci(v[1]) + "," + cli::sci(v[2]) + "," + cli::sci(v[3]) + "\n";
    }
    const auto tracked = run({"invert", "--rates-file", dir.file("seq.csv", table), "--r0", "1", "--reference",
                              "1,0.5,1.6"});
    ASSERT_EQ(tracked.code, 0) << tracked.err;
    const auto rows = lines(tracked.out);
    ASSERT_EQ(rows.size(), 6u);
    for (int k = 0; k < 5; ++k) {
        const auto v = numbers_in(rows[k + 1]);
        EXPECT_NEAR(v[0], 1.0 + 0.02 * k, 1e-6);
        EXPECT_NEAR(v[1], 0.5 + 0.03 * k, 1e-6);
        EXPECT_NEAR(v[2], 1.6, 1e-6);
    }
}

TEST(CliInvert, BruteForceCheckAgrees) {
    const auto r = grover_mz_rates({0.9, 1.3, -2.0}, 1.0).values();
    std::string rates;
    for (int k = 0; k < 4; ++k) rates += (k ? "," : "") + cli::sci(r[k]);
    const auto out = run({"invert", "--rates", rates, "--r0", "1", "--brute-force-check", "0.1"});
    EXPECT_EQ(out.code, 0) << out.err;
    EXPECT_NE(out.err.find("brute-force oracle"), std::string::npos);
}

TEST(CliSagnac, ForwardInverseAndZero) {
    const auto fwd = run({"sagnac", "--areas", "1,1,1", "--wavelength", "1550e-9", "--omega", "1,1,1",
                          "--format", "pretty"});
    ASSERT_EQ(fwd.code, 0) << fwd.err;
    EXPECT_NEAR(pretty_value(fwd.out, "phi0"), 0.0, 1e-15);
    EXPECT_NEAR(pretty_value(fwd.out, "phi1"), 0.05409, 0.05409 * 1e-4);
    EXPECT_NEAR(pretty_value(fwd.out, "phi2"), 0.10818, 0.10818 * 1e-4);

    const auto csv = lines(run({"sagnac", "--omega", "1,1,1"}).out);
    const auto v = numbers_in(csv.at(1));
    const std::string phases = cli::sci(v[3]) + "," + cli::sci(v[4]) + "," + cli::sci(v[5]);
    const auto inv = run({"sagnac", "--phases", phases, "--format", "pretty"});
    for (const char* k : {"omega_x", "omega_y", "omega_z"}) EXPECT_NEAR(pretty_value(inv.out, k), 1.0, 1e-12);

    const std::string rates = cli::sci(v[6]) + "," + cli::sci(v[7]) + "," + cli::sci(v[8]) + "," + cli::sci(v[9]);
    const auto from_rates = run({"sagnac", "--rates", rates, "--r0", "1", "--format", "pretty"});
    ASSERT_EQ(from_rates.code, 0) << from_rates.err;
    for (const char* k : {"omega_x", "omega_y", "omega_z"}) {
        EXPECT_NEAR(std::abs(pretty_value(from_rates.out, k)), 1.0, 1e-6);
    }

    const auto zero = run({"sagnac", "--omega", "0,0,0", "--format", "pretty"});
    for (const char* k : {"phi_x", "phi_y", "phi_z", "phi0", "phi1", "phi2", "r_ac", "r_ad", "r_cd"}) {
        EXPECT_EQ(pretty_value(zero.out, k), 0.0) << k;
    }
}
