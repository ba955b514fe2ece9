// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/assembly.hpp"
#include "rcc/scenario.hpp"
#include "rcc/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace rcc
{

/// P_C(‖h̄_b‖² + ε_hb² + 2ε_hb‖h̄_b‖), the closed-form bound on μ as it is
/// usually written. It drops Bob's noise, so it bounds |h_bᴴt|², not his SINR.
double mu_upper_bound(const Scenario& s);

/// mu_upper_bound / σ_b²: Bob's worst-case SINR never exceeds it, so neither
/// does any μ with a nonnegative secrecy rate.
double sinr_upper_bound(const Scenario& s);

struct SearchGrid
{
    double mu_min = 0.0;
    double mu_max = 0.0;
    int coarse_points = 64;
    int refinement = 2;  // levels, each with a 10× finer step around the incumbent

    [[nodiscard]] double delta() const;
    void validate() const;
};

struct InnerOptions
{
    SolverConfig solver;
    AssemblyOptions assembly;
};

struct InnerOutcome
{
    bool feasible = false;
    double mu = 0.0;
    double gamma_b = 0.0;
    CMatrix t_hat;
    CMatrix rx_hat;
    double zeta = 0.0;
    SolverStatus status = SolverStatus::numerical_failure;
    int iterations = 0;
    bool retried = false;
    bool shortcut = false;  // closed form, no solve
    double max_violation = 0.0;
    double seconds = 0.0;
    std::string diagnostic;
};

/// γ_b(μ) from the assembled inner problem. Closed form when the beamformer
/// is forced to zero (P_C = 0, or μ = 0 with a nonzero Eve ball). A solver
/// failure is retried once with stronger regularization.
InnerOutcome inner_solve(const Scenario& s, const CMatrix& r_d, double mu, const InnerOptions& options = {});

struct Recovered
{
    HermitianMatrix t;
    HermitianMatrix r_x;
    bool degenerate = false;  // ζ at its floor
};

/// T = T̂/ζ, R_x = R̂_x/ζ, cleaned to PSD.
Recovered recover(const CMatrix& t_hat, const CMatrix& rx_hat, double zeta, double zeta_min = 1e-8);

struct ExtractionOptions
{
    int candidates = 1000;
    double rank_threshold = 1e-4;
    std::uint64_t seed = 0x7a11;
};

struct Extraction
{
    CVector t;
    double rank_ratio = 0.0;
    bool randomized = false;
    bool fallback = false;  // no usable candidate; dominant eigenvector returned
    int candidates_tried = 0;
    double worst_case_difference = 0.0;  // exact worst-case log₂ difference of t
    std::string warning;
};

/// Scale factor c ≥ 0 making c·t respect the power budget, the robust INR
/// bound and, when mu_cap is finite, Eve's worst-case SINR ≤ mu_cap.
double feasible_scale(const CVector& t, const Scenario& s, const CMatrix& r_x, double mu_cap);

/// Rank-one beamformer from T: principal eigenvector when λ₂/λ₁ is below the
/// threshold, otherwise Gaussian randomization ranked by the exact worst-case
/// secrecy rate. Candidates are scaled by feasible_scale.
Extraction extract_beamformer(const CMatrix& t, const Scenario& s, const CMatrix& r_x, double mu_cap,
                              const ExtractionOptions& options = {});

struct ProbeRecord
{
    double mu = 0.0;
    double gamma_b = 0.0;
    double objective = 0.0;  // (1 + γ_b)/(1 + μ); −∞ when infeasible
    bool feasible = false;
    int level = 0;  // 0 coarse, then refinement level
    SolverStatus status = SolverStatus::numerical_failure;
    int iterations = 0;
    double seconds = 0.0;
};

struct DesignOptions
{
    int coarse_points = 64;
    int refinement = 2;
    bool prune = true;             // skip probes whose bound cannot beat the incumbent
    double prune_tolerance = 1e-6;  // relative margin under the incumbent
    bool cap_with_ceiling = true;  // μ_max ≤ γ_b without the Eve constraint
    InnerOptions inner;
    ExtractionOptions extraction;
};

enum class DesignStatus
{
    optimal,
    infeasible,  // no probe solved
};

std::string to_string(DesignStatus s);

struct DesignSolution
{
    DesignStatus status = DesignStatus::infeasible;
    CVector t;
    HermitianMatrix T;
    HermitianMatrix R_x;
    double mu_star = 0.0;
    double eta_star = 0.0;
    double zeta_star = 0.0;
    double objective = 0.0;
    double rank_ratio = 0.0;
    bool randomized = false;
    bool degenerate = false;
    // (1 + Bob's worst-case SINR under t)/(1 + μ*): the inner objective at the
    // rank-one point, never above `objective`.
    double rank_one_objective = 0.0;
    double worst_case_rate = 0.0;  // exact worst-case secrecy rate of (t, R_x)

    double mu_bound = 0.0;       // closed-form bound
    double gamma_ceiling = 0.0;  // γ_b without the Eve constraint
    SearchGrid grid;
    std::vector<ProbeRecord> per_mu_trace;  // μ order
    int pruned = 0;
    int inner_solves = 0;  // probes plus the ceiling solve
    int monotonicity_flags = 0;
    double monotonicity_worst = 0.0;  // largest γ_b drop between adjacent probes
    double seconds = 0.0;
    std::string diagnostic;

    [[nodiscard]] double secrecy_bound() const;  // log₂ objective
};

/// Outer μ search: coarse grid then refinement, each probe an inner_solve;
/// returns the argmax probe recovered and reduced to a beamformer.
DesignSolution run_design(const Scenario& s, const CMatrix& r_d, const DesignOptions& options = {});

nlohmann::json to_json(const DesignSolution& d);

}  // namespace rcc
