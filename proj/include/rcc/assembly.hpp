// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/conic.hpp"
#include "rcc/scenario.hpp"

namespace rcc
{

struct AssemblyOptions
{
    double zeta_min = 1e-8;
    bool omit_eve = false;  // drop the eavesdropper constraint (μ → ∞)

    void validate() const;
};

/// Where each quantity of the inner problem lives in the program. Unused
/// multipliers have slot −1. When `t_basis` is non-empty the matrix variable
/// is S with T̂ = B S Bᴴ; when `rx_block` is −1, R̂_x = ζ R_d.
struct InnerLayout
{
    int t_block = -1;
    CMatrix t_basis;
    int rx_block = -1;
    int zeta = -1;
    int eta = -1;
    int lambda1 = -1;
    int lambda2 = -1;
    int lambda3 = -1;
    int xi = -1;  // holds ξ/ε_fe²

    [[nodiscard]] bool rx_substituted() const { return rx_block < 0; }
};

struct InnerProgram
{
    ConicProgram program;
    InnerLayout layout;
    double mu = 0.0;
};

/// Declare the variables for (scenario, μ) without adding constraints.
InnerProgram declare_inner_variables(const Scenario& s, double mu, const AssemblyOptions& options = {});

// Constraint families. Each appends to `ip.program`. A family whose ball
// radius is zero becomes a scalar row instead of an LMI.

/// (h̄_b + Δ)ᴴ T̂ (h̄_b + Δ) ≥ η for all ‖Δ‖ ≤ ε_hb
void add_bob_rate(InnerProgram& ip, const Scenario& s);

/// (f̄_b + Δ)ᴴ R̂_x (f̄_b + Δ) + ζσ_b² ≤ 1 for all ‖Δ‖ ≤ ε_fb
void add_bs_interference(InnerProgram& ip, const Scenario& s, const CMatrix& r_d);

/// (h̄_e + Δ_h)ᴴ T̂ (h̄_e + Δ_h) ≤ μ((f̄_e + Δ_f)ᴴ R̂_x (f̄_e + Δ_f) + ζσ_e²) over both balls
void add_eve_leakage(InnerProgram& ip, const Scenario& s, const CMatrix& r_d);

/// ḡ_mᵀ T̂ ḡ_m* + (2ε_gm‖ḡ_m‖ + ε_gm²) Tr T̂ ≤ Γ_m ζ σ_r², one row per radar antenna
void add_robust_inr(InnerProgram& ip, const Scenario& s);

/// ‖R̂_x − ζ R_d‖_F ≤ √γ_p ζ
void add_mismatch(InnerProgram& ip, const Scenario& s, const CMatrix& r_d);

/// Full inner problem for fixed μ: maximize η subject to every family above,
/// PSD(T̂), PSD(R̂_x), Tr R̂_x ≤ P_R ζ, Tr T̂ ≤ P_C ζ, ζ ≥ ζ_min, multipliers ≥ 0.
///
/// Reductions applied before assembly:
///   γ_p = 0            R̂_x = ζ R_d, the cone and radar power rows disappear
///   ε_he = 0, μ = 0    T̂ = B S Bᴴ with B spanning h̄_e⊥, Eve constraint dropped
///   ε_he = 0, h̄_e = 0  Eve constraint dropped
///   μ = 0              Eve's radar-channel ball and ξ are dropped
InnerProgram assemble_inner(const Scenario& s, const CMatrix& r_d, double mu, const AssemblyOptions& options = {});

/// Closed-form size of assemble_inner's output.
ConicProgram::Dimensions inner_dimensions(const Scenario& s, double mu, const AssemblyOptions& options = {});

/// T̂ and R̂_x in an assignment of an assembled program.
CMatrix t_hat_value(const InnerProgram& ip, const RVector& x);
CMatrix rx_hat_value(const InnerProgram& ip, const CMatrix& r_d, const RVector& x);

/// Orthonormal basis of the orthogonal complement of h (N × (N−1)).
CMatrix orthogonal_complement(const CVector& h);

}  // namespace rcc
