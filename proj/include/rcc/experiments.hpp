// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/design.hpp"
#include "rcc/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rcc
{

/// Version written into every CSV header.
std::string code_version();

enum class ExperimentKind
{
    beampattern,
    secrecy_vs_power,
    secrecy_vs_detection,
    single
};

std::string to_string(ExperimentKind k);

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::single;
    ScenarioTemplate scenario;
    int trials = 200;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir = "out";

    // beampattern: γ_p as multiples of P_R
    std::vector<double> gamma_p_ratios = {0.1, 0.5, 1.0};
    // secrecy vs power: a P_C sweep at one ε² and an ε² sweep at one P_C; ε²
    // applies to all five normalized radii
    std::vector<double> pc_dbm = {24.0, 27.0, 30.0, 33.0};
    double power_sweep_eps2 = 1e-2;
    std::vector<double> eps2_values = {0.0, 1e-3, 1e-2};
    double eps2_sweep_pc_dbm = 30.0;
    // trade-off: one curve per Γ_m, points along it from the γ_p sweep
    std::vector<double> gamma_inr_db = {-15.0, -10.0, -5.0};
    std::vector<double> tradeoff_gamma_p_ratios = {0.01, 0.03, 0.1, 0.3, 1.0};

    DesignOptions design;
    int oracle_budget = 2000;        // samples per ball for the worst-case oracle
    int falsifier_samples = 10000;   // samples per ball for the robustness certificate
    int stop_after = -1;             // run at most this many new tasks (interruption drills)
    bool quiet = false;              // no progress lines on stderr

    void validate() const;
    /// Canonical text of everything that affects results (not jobs, output
    /// directory or stop_after).
    [[nodiscard]] std::string canonical() const;
};

/// [scenario] feeds the template; [experiment] holds the keys below, lists
/// separated by spaces or commas:
///   trials, seed, jobs, out, gamma_p_ratios, pc_dbm, power_sweep_eps2,
///   eps2_values, eps2_sweep_pc_dbm, gamma_inr_db, tradeoff_gamma_p_ratios, coarse_points, refinement,
///   prune, candidates, rank_threshold, oracle_budget, falsifier_samples
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

/// Sampling falsifier for a solved design: interior and boundary samples on
/// each ball, `samples` per ball.
struct FalsifierReport
{
    int samples = 0;
    double bob_min_sinr = 0.0;
    double eve_max_sinr = 0.0;
    double inr_max_ratio = 0.0;  // max_m INR_m / Γ_m
    bool bob_ok = true;
    bool eve_ok = true;
    bool inr_ok = true;

    [[nodiscard]] bool passed() const { return bob_ok && eve_ok && inr_ok; }
};

/// Checks Bob's SINR ≥ eta_floor − 1e-6 (skipped when eta_floor is −∞),
/// Eve's SINR ≤ mu_cap + 1e-6 (skipped when +∞) and INR_m ≤ Γ_m(1 + 1e-6).
FalsifierReport falsify(const Scenario& s, const CMatrix& t, const CMatrix& r_x, double eta_floor, double mu_cap,
                        int samples, std::uint64_t seed);

/// Metrics of a design evaluated on the scenario with its true error radii.
struct TrialMetrics
{
    bool solved = false;
    double worst_case_rate = 0.0;  // oracle, clamped at 0
    double worst_case_difference = 0.0;
    double nominal_rate = 0.0;
    double p_d = 0.0;
    double inr_margin_db = 0.0;  // max_m worst-case INR_m / Γ_m in dB, ≤ 0 when met
    double mismatch = 0.0;       // ‖R_x − R_d‖_F
    bool certified = false;      // falsifier against the scenario the design was made for
    double rank_ratio = 0.0;
    double secrecy_bound = 0.0;   // log₂ of the SDR objective
    double rank_one_bound = 0.0;  // log₂ of the objective at the extracted beamformer
    double sdr_ratio = 1.0;       // oracle worst-case rate / secrecy_bound (1 when the bound is 0)
    double mu_star = 0.0;
    double eta_star = 0.0;
    double seconds = 0.0;
    std::string status;
};

TrialMetrics evaluate_design(const Scenario& truth, const Scenario& designed_for, const DesignSolution& d,
                             const CMatrix& r_d, const ExperimentConfig& cfg, std::uint64_t seed);

struct ExperimentResult
{
    std::string csv_path;
    std::string summary_path;
    nlohmann::json summary;
    int tasks_total = 0;
    int tasks_resumed = 0;  // found complete in an existing CSV
    int tasks_run = 0;
    bool complete = false;
};

/// Beampattern of the designed R_x per γ_p, plus R_d's as the reference curve.
ExperimentResult run_beampattern_experiment(const ExperimentConfig& cfg);

/// Robust and non-robust worst-case secrecy per (P_C, ε²) cell.
ExperimentResult run_secrecy_vs_power(const ExperimentConfig& cfg);

/// Mean P_D against mean worst-case secrecy along each Γ_m curve.
ExperimentResult run_tradeoff_experiment(const ExperimentConfig& cfg);

struct SingleReport
{
    DesignSolution design;
    TrialMetrics metrics;
    FalsifierReport sdr_certificate;     // (T, R_x) against η*, μ*, Γ
    FalsifierReport design_certificate;  // (t, R_x) against μ*, Γ
    std::string verdict;                 // "optimal", "over-constrained" or "failed"
    std::string diagnosis;
    nlohmann::json json;
};

/// One scenario (trial 0 of the seed), solved, certified and falsified; a
/// readable report goes to `out`.
SingleReport run_single(const ExperimentConfig& cfg, std::ostream& out);

/// Quick end-to-end checks on small instances; one line per check. Returns
/// the number of failed checks.
int run_selftest(std::ostream& out);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rcc
