// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/linalg.hpp"
#include "rcc/scenario.hpp"

#include <cstdint>

namespace rcc
{

/// (hᴴ T h) / (fᴴ R_x f + σ²)
double sinr(const CVector& h, const CVector& f, const CMatrix& t, const CMatrix& r_x, double sigma2);
inline double sinr_bob(const CVector& h_b, const CVector& f_b, const CMatrix& t, const CMatrix& r_x, double sigma_b2)
{
    return sinr(h_b, f_b, t, r_x, sigma_b2);
}
inline double sinr_eve(const CVector& h_e, const CVector& f_e, const CMatrix& t, const CMatrix& r_x, double sigma_e2)
{
    return sinr(h_e, f_e, t, r_x, sigma_e2);
}

struct SecrecyReport
{
    double gamma_b = 0.0;
    double gamma_e = 0.0;
    double rate_b = 0.0;
    double rate_e = 0.0;
    double difference = 0.0;     // rate_b − rate_e before the clamp
    double secrecy_rate = 0.0;   // max(difference, 0)
    bool worst_case = false;
    ChannelRealization witness;  // set when worst_case
};

SecrecyReport secrecy_rate(const ChannelRealization& real, const CMatrix& t, const CMatrix& r_x, const Scenario& s);

/// Extreme of xᴴ A x over ‖x − center‖ ≤ radius for PSD A, with its argument.
struct BallExtreme
{
    double value = 0.0;
    CVector point;
};

/// Convex case: exact minimizer via the secular equation.
BallExtreme min_quadratic_on_ball(const CMatrix& a, const CVector& center, double radius);
/// Trust-region case: exact maximizer via the secular equation, including
/// the hard case where the center has no component on the top eigenspace.
BallExtreme max_quadratic_on_ball(const CMatrix& a, const CVector& center, double radius);

struct OracleOptions
{
    int budget = 20000;  // samples per ball, alternating boundary / interior
    int refinement_steps = 50;
    std::uint64_t seed = 0x5eed;
    bool exact_candidates = true;  // seed the search with the secular-equation extremes
};

/// Adversarial estimate of the worst-case secrecy rate. The four balls
/// decouple: Δ_hb and Δ_fb only lower Bob's SINR, Δ_he and Δ_fe only raise
/// Eve's. Each ball is searched by sampling, then projected-gradient steps
/// from the best sample; the best point found is the witness.
SecrecyReport worst_case_secrecy(const Scenario& s, const CMatrix& t, const CMatrix& r_x,
                                 const OracleOptions& options = {});

/// Exact worst case from the four secular-equation extremes alone.
SecrecyReport worst_case_secrecy_exact(const Scenario& s, const CMatrix& t, const CMatrix& r_x);

}  // namespace rcc
