// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/linalg.hpp"
#include "rcc/scenario.hpp"
#include "rcc/solver.hpp"

#include <vector>

namespace rcc
{

/// Desired transmit beampattern sampled on an angle grid (degrees).
struct BeampatternSpec
{
    std::vector<double> grid;
    RVector desired_gain;
    double mainlobe_lo = 80.0;
    double mainlobe_hi = 100.0;

    void validate() const;
};

/// θ ∈ [lo, hi] (mod 360°). A lobe containing 90° or 270° wraps through
/// sin θ = ±1, where the half-wavelength array aliases, so θ + 180° counts too.
bool in_mainlobe(double theta_deg, double lo, double hi);

/// Indicator of the mainlobe on a uniform grid over [0°, 360°). With the sin θ
/// steering phase, [0°, 180°] alone only covers sin θ ≥ 0 and leaves the
/// other half of the visible region unconstrained.
BeampatternSpec mainlobe_mask(double lo, double hi, double step_deg = 1.0);

/// a(θ)ᴴ R a(θ)
double beampattern(const CMatrix& r, double theta_deg);
RVector beampattern(const CMatrix& r, const std::vector<double>& grid);

/// Mean gain inside and outside the mainlobe over the spec grid.
struct LobeAverages
{
    double mainlobe = 0.0;
    double sidelobe = 0.0;
};
LobeAverages lobe_averages(const CMatrix& r, const BeampatternSpec& spec);

struct CovarianceDesign
{
    HermitianMatrix r_d;
    double scale = 0.0;     // η of the fitted mask
    double residual = 0.0;  // ‖η·d − P(R_d)‖₂ over the grid
    int iterations = 0;
};

/// Least-squares beampattern match: minimize ‖η·d − [a_kᴴ R a_k]_k‖ over
/// R ⪰ 0 with Tr R = p_r and η ≥ 0. Throws std::runtime_error when the solver
/// does not return an optimal point.
CovarianceDesign design_ideal_covariance(const BeampatternSpec& spec, double p_r, int m,
                                         const SolverConfig& config = {});

/// gᵀ T g* / σ_r²
double inr_per_antenna(const CVector& g, const CMatrix& t, double sigma_r2);

/// |α|²·L·Tr(A R_x Aᴴ Q⁻¹) with A = a_r a_tᴴ and Q = Gᵀ T G* + σ_r² I.
double noncentrality(const CMatrix& r_x, const CMatrix& t, const CMatrix& g, const CVector& a_t, const CVector& a_r,
                     double alpha_mag2, double pulse_len, double sigma_r2);

struct DetectionOutcome
{
    double rho = 0.0;
    double p_d = 0.0;
    double p_fa = 0.0;
    double threshold = 0.0;
};

/// P(|√ρ + w|² > τ) for w ~ CN(0, 2), i.e. the Marcum Q₁(√ρ, √τ) with the
/// central threshold τ = −2 ln p_fa.
DetectionOutcome detection_probability(double rho, double p_fa);

/// Detection probability averaged over targets on a 1° grid spanning the
/// scenario mainlobe (nominal radar channels).
double mainlobe_detection_probability(const Scenario& s, const CMatrix& t, const CMatrix& r_x);

}  // namespace rcc
