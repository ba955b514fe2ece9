// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/conic.hpp"

#include <string>
#include <vector>

namespace rcc
{

enum class SolverStatus
{
    optimal,
    infeasible,  // primal infeasible, certificate in the dual fields
    unbounded,   // dual infeasible, improving ray in x
    numerical_failure,
    iteration_limit
};

std::string to_string(SolverStatus s);

struct SolverConfig
{
    double gap_tol = 1e-7;   // absolute or relative duality gap
    double feas_tol = 1e-8;  // relative primal / dual residual
    int max_iters = 200;
    double step_fraction = 0.98;
    bool mehrotra = true;           // second-order corrector
    double regularization = 1e-12;  // added to the Newton matrix on Cholesky breakdown
    // When progress stops, the best iterate within this factor of both
    // tolerances is returned as optimal with a reduced-accuracy diagnostic.
    double reduced_accuracy_factor = 100.0;

    void validate() const;
};

struct IterationRecord
{
    int iteration = 0;
    double primal_objective = 0.0;  // in the program's own sense (max or min)
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;  // sᵀz / τ²
    double tau = 0.0;
    double kappa = 0.0;
    double step = 0.0;
};

struct SolverSolution
{
    SolverStatus status = SolverStatus::numerical_failure;
    RVector x;
    double objective = 0.0;
    double dual_objective = 0.0;
    double duality_gap = 0.0;  // relative where defined, else absolute
    double absolute_gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    std::string diagnostic;
    std::vector<IterationRecord> log;

    // Dual variables: one per constraint family. For an infeasible program they
    // hold the normalized Farkas certificate.
    RVector y;  // equalities
    RVector z_linear;
    std::vector<RVector> z_soc;
    std::vector<CMatrix> z_lmi;

    [[nodiscard]] bool optimal() const { return status == SolverStatus::optimal; }
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling on
/// Hermitian PSD blocks, second-order cones and the nonnegative orthant.
SolverSolution solve(const ConicProgram& program, const SolverConfig& config = {});

struct CertificationReport
{
    double objective = 0.0;
    double max_violation = 0.0;  // max over all constraints, absolute
    std::string worst_constraint;
    std::vector<double> lmi_min_eigenvalues;
    std::vector<double> soc_margins;  // u0 − ‖u1‖
    double linear_min = 0.0;          // min over linear rows (≥ 0 is feasible)
    double equality_max_abs = 0.0;

    [[nodiscard]] bool feasible(double tol) const { return max_violation <= tol; }
};

/// Recompute every constraint value of `program` at x from the problem data
/// alone and report the worst violation.
CertificationReport certify(const ConicProgram& program, const RVector& x);
CertificationReport certify(const ConicProgram& program, const SolverSolution& solution);

}  // namespace rcc
