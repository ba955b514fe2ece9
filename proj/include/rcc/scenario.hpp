// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace rcc
{

/// System constants, nominal channels and CSI error radii. All quantities are
/// linear: watts for powers and noise, channel units for radii.
struct Scenario
{
    int n_bs = 4;
    int m_radar = 16;
    double p_c = 1.0;
    double p_r = 20.0;
    double sigma_b2 = 1e-3;
    double sigma_e2 = 1e-3;
    double sigma_r2 = 1e-3;

    CVector h_bar_b, h_bar_e;  // N
    CVector f_bar_b, f_bar_e;  // M
    std::vector<CVector> g_bar;  // M vectors of length N

    double eps_hb = 0.0;
    double eps_he = 0.0;
    double eps_fb = 0.0;
    double eps_fe = 0.0;
    double eps_gm = 0.0;

    double gamma_p = 2.0;  // bound on ‖R_x − R_d‖_F²
    RVector gamma_inr;     // per radar antenna, linear
    double p_fa = 1e-4;
    double pulse_len = 1.0;
    double alpha_mag2 = 0.0;
    double mainlobe_lo = 80.0;
    double mainlobe_hi = 100.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// Columns are the BS→radar channels: G = [g_1 … g_M], N×M.
    [[nodiscard]] CMatrix g_matrix() const;
};

/// A copy of `s` with every error radius set to zero.
Scenario with_zero_radii(Scenario s);

/// One draw of all five channel sets.
struct ChannelRealization
{
    CVector h_b, h_e;
    CVector f_b, f_e;
    std::vector<CVector> g;
};

ChannelRealization nominal_realization(const Scenario& s);

/// Largest ratio ‖x − x̄‖/ε over the five balls (0/0 counts as 0, x ≠ x̄ with
/// ε = 0 as +∞). A realization is admissible iff the result is ≤ 1.
double ball_excess(const Scenario& s, const ChannelRealization& r);

/// Entry k = exp(jπ k sin θ), θ in degrees.
CVector steering_vector(double theta_deg, int count);

enum class BallMode
{
    interior,
    boundary
};

/// Uniform draw from the ball (interior) or sphere (boundary) of `radius`
/// around `center` in Cⁿ.
CVector sample_error_ball(const CVector& center, double radius, BallMode mode, std::mt19937_64& rng);
CVector sample_error_ball(const CVector& center, double radius, BallMode mode, std::uint64_t seed);

/// Every channel drawn from its ball, all with the same mode.
ChannelRealization sample_realization(const Scenario& s, BallMode mode, std::mt19937_64& rng);

/// Recipe for random scenarios. Radii are given normalized: the absolute
/// squared radius is eps2_x · ρ of the link the ball belongs to.
struct ScenarioTemplate
{
    int n_bs = 4;
    int m_radar = 16;
    double p_c = 1.0;                // 30 dBm
    double p_r = 19.952623149688797;  // 43 dBm
    double sigma_b2 = 1e-3;          // 0 dBm
    double sigma_e2 = 1e-3;
    double sigma_r2 = 1e-3;
    double rho1 = 1.0;   // BS links
    double rho2 = 0.02;  // radar-coupled links
    double eps2_hb = 1e-2;
    double eps2_he = 1e-2;
    double eps2_fb = 1e-2;
    double eps2_fe = 1e-2;
    double eps2_gm = 1e-2;
    double gamma_p_ratio = 0.1;  // γ_p = ratio · p_r
    double gamma_inr = 0.1;      // −10 dB, every antenna
    double p_fa = 1e-4;
    double pulse_len = 1.0;
    double radar_snr = 1.5848931924611136;  // 2 dB, |α|²·L·p_r·M/σ_r²
    double mainlobe_lo = 80.0;
    double mainlobe_hi = 100.0;

    void validate() const;

    [[nodiscard]] double alpha_mag2() const { return radar_snr * sigma_r2 / (pulse_len * p_r * m_radar); }

    /// Canonical text used for digests and CSV headers.
    [[nodiscard]] std::string canonical() const;
};

/// Draw nominal channels: h̄_b, h̄_e ~ CN(0, ρ₁I); f̄_b, f̄_e, ḡ_m ~ CN(0, ρ₂I).
/// Draw order is h̄_b, h̄_e, f̄_b, f̄_e, ḡ_1…ḡ_M.
Scenario sample_scenario(std::uint64_t seed, const ScenarioTemplate& tpl);

/// Seed for trial `index` of a batch: independent of worker count.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string digest(const std::string& text);

double dbm_to_watt(double dbm);
double watt_to_dbm(double w);
double db_to_linear(double db);
double linear_to_db(double x);

/// Sections of an INI-style file, keys in file order. Full-line and
/// trailing comments start with ';' or '#'.
using ConfigSection = std::vector<std::pair<std::string, std::string>>;
std::map<std::string, ConfigSection> read_config_sections(std::istream& in);

/// Key-value configuration. Keys live in a [scenario] section; quantities
/// accept a unit suffix (W, mW, dBm, dB) where it makes sense.
/// Unknown keys are rejected.
ScenarioTemplate load_scenario_template(const std::string& path);
ScenarioTemplate parse_scenario_template(std::istream& in);

/// Apply one "key = value" override, e.g. from a sweep.
void set_template_field(ScenarioTemplate& tpl, const std::string& key, const std::string& value);

}  // namespace rcc
