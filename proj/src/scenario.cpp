// SPDX-License-Identifier: Apache-2.0
#include "rcc/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rcc
{

namespace
{

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

void require_length(const CVector& v, int n, const std::string& name)
{
    require(v.size() == n, "scenario: " + name + " has length " + std::to_string(v.size()) + ", expected " +
                               std::to_string(n));
}

double ratio_to_ball(const CVector& x, const CVector& center, double radius)
{
    const double d = (x - center).norm();
    if (d == 0.0)
        return 0.0;
    if (radius == 0.0)
        return std::numeric_limits<double>::infinity();
    return d / radius;
}

CVector gaussian_vector(int n, double variance, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    CVector v(n);
    for (int i = 0; i < n; ++i)
    {
        const double re = g(rng);
        const double im = g(rng);
        v(i) = cplx(re, im);
    }
    return v;
}

}  // namespace

void Scenario::validate() const
{
    require(n_bs >= 1 && m_radar >= 1, "scenario: antenna counts must be positive");
    require(p_c >= 0.0 && std::isfinite(p_c), "scenario: p_c must be a nonnegative power");
    require(p_r > 0.0 && std::isfinite(p_r), "scenario: p_r must be positive");
    require(sigma_b2 > 0.0 && sigma_e2 > 0.0 && sigma_r2 > 0.0, "scenario: noise powers must be positive");
    require_length(h_bar_b, n_bs, "h_bar_b");
    require_length(h_bar_e, n_bs, "h_bar_e");
    require_length(f_bar_b, m_radar, "f_bar_b");
    require_length(f_bar_e, m_radar, "f_bar_e");
    require(static_cast<int>(g_bar.size()) == m_radar, "scenario: g_bar must hold m_radar vectors");
    for (std::size_t m = 0; m < g_bar.size(); ++m)
        require_length(g_bar[m], n_bs, "g_bar[" + std::to_string(m) + "]");
    for (const double e : {eps_hb, eps_he, eps_fb, eps_fe, eps_gm})
        require(e >= 0.0 && std::isfinite(e), "scenario: error radii must be nonnegative");
    require(gamma_p >= 0.0 && std::isfinite(gamma_p), "scenario: gamma_p must be nonnegative");
    require(gamma_inr.size() == m_radar, "scenario: gamma_inr must have m_radar entries");
    require((gamma_inr.array() >= 0.0).all(), "scenario: gamma_inr must be nonnegative");
    require(p_fa > 0.0 && p_fa < 1.0, "scenario: p_fa must lie in (0, 1)");
    require(pulse_len > 0.0 && alpha_mag2 >= 0.0, "scenario: pulse_len must be positive, alpha_mag2 nonnegative");
    require(mainlobe_lo < mainlobe_hi, "scenario: mainlobe interval is empty");
}

CMatrix Scenario::g_matrix() const
{
    CMatrix g(n_bs, m_radar);
    for (int m = 0; m < m_radar; ++m)
        g.col(m) = g_bar[static_cast<std::size_t>(m)];
    return g;
}

Scenario with_zero_radii(Scenario s)
{
    s.eps_hb = s.eps_he = s.eps_fb = s.eps_fe = s.eps_gm = 0.0;
    return s;
}

ChannelRealization nominal_realization(const Scenario& s)
{
    return {s.h_bar_b, s.h_bar_e, s.f_bar_b, s.f_bar_e, s.g_bar};
}

double ball_excess(const Scenario& s, const ChannelRealization& r)
{
    double worst = std::max({ratio_to_ball(r.h_b, s.h_bar_b, s.eps_hb), ratio_to_ball(r.h_e, s.h_bar_e, s.eps_he),
                             ratio_to_ball(r.f_b, s.f_bar_b, s.eps_fb), ratio_to_ball(r.f_e, s.f_bar_e, s.eps_fe)});
    for (std::size_t m = 0; m < s.g_bar.size(); ++m)
        worst = std::max(worst, ratio_to_ball(r.g[m], s.g_bar[m], s.eps_gm));
    return worst;
}

CVector steering_vector(double theta_deg, int count)
{
    if (count < 1)
        throw std::invalid_argument("steering_vector: count must be positive");
    const double s = std::sin(theta_deg * std::numbers::pi / 180.0);
    CVector a(count);
    for (int k = 0; k < count; ++k)
        a(k) = std::polar(1.0, std::numbers::pi * k * s);
    return a;
}

CVector sample_error_ball(const CVector& center, double radius, BallMode mode, std::mt19937_64& rng)
{
    if (radius < 0.0)
        throw std::invalid_argument("sample_error_ball: negative radius");
    if (radius == 0.0 || center.size() == 0)
        return center;
    const auto n = static_cast<int>(center.size());
    CVector dir = gaussian_vector(n, 1.0, rng);
    double nrm = dir.norm();
    while (nrm == 0.0)
    {
        dir = gaussian_vector(n, 1.0, rng);
        nrm = dir.norm();
    }
    dir /= nrm;
    double r = radius;
    if (mode == BallMode::interior)
    {
        // radial CDF of the uniform ball in C^n ≅ R^{2n} is (r/ε)^{2n}
        std::uniform_real_distribution<double> u(0.0, 1.0);
        r *= std::pow(u(rng), 1.0 / (2.0 * n));
    }
    return center + r * dir;
}

CVector sample_error_ball(const CVector& center, double radius, BallMode mode, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return sample_error_ball(center, radius, mode, rng);
}

ChannelRealization sample_realization(const Scenario& s, BallMode mode, std::mt19937_64& rng)
{
    ChannelRealization r;
    r.h_b = sample_error_ball(s.h_bar_b, s.eps_hb, mode, rng);
    r.h_e = sample_error_ball(s.h_bar_e, s.eps_he, mode, rng);
    r.f_b = sample_error_ball(s.f_bar_b, s.eps_fb, mode, rng);
    r.f_e = sample_error_ball(s.f_bar_e, s.eps_fe, mode, rng);
    r.g.reserve(s.g_bar.size());
    for (const auto& g : s.g_bar)
        r.g.push_back(sample_error_ball(g, s.eps_gm, mode, rng));
    return r;
}

void ScenarioTemplate::validate() const
{
    require(n_bs >= 1 && m_radar >= 1, "config: n_bs and m_radar must be positive");
    require(p_c >= 0.0 && p_r > 0.0, "config: p_c must be nonnegative and p_r positive");
    require(sigma_b2 > 0.0 && sigma_e2 > 0.0 && sigma_r2 > 0.0, "config: noise powers must be positive");
    require(rho1 >= 0.0 && rho2 >= 0.0, "config: rho1 and rho2 must be nonnegative");
    for (const double e : {eps2_hb, eps2_he, eps2_fb, eps2_fe, eps2_gm})
        require(e >= 0.0 && std::isfinite(e), "config: eps2 values must be nonnegative");
    require(gamma_p_ratio >= 0.0, "config: gamma_p must be nonnegative");
    require(gamma_inr >= 0.0, "config: gamma_inr must be nonnegative");
    require(p_fa > 0.0 && p_fa < 1.0, "config: p_fa must lie in (0, 1)");
    require(pulse_len > 0.0 && radar_snr >= 0.0, "config: pulse_len must be positive, radar_snr nonnegative");
    require(mainlobe_lo < mainlobe_hi, "config: mainlobe interval is empty");
}

std::string ScenarioTemplate::canonical() const
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "n_bs=" << n_bs << ";m_radar=" << m_radar << ";p_c=" << p_c << ";p_r=" << p_r << ";sigma_b2=" << sigma_b2
       << ";sigma_e2=" << sigma_e2 << ";sigma_r2=" << sigma_r2 << ";rho1=" << rho1 << ";rho2=" << rho2
       << ";eps2_hb=" << eps2_hb << ";eps2_he=" << eps2_he << ";eps2_fb=" << eps2_fb << ";eps2_fe=" << eps2_fe
       << ";eps2_gm=" << eps2_gm << ";gamma_p_ratio=" << gamma_p_ratio << ";gamma_inr=" << gamma_inr
       << ";p_fa=" << p_fa << ";pulse_len=" << pulse_len << ";radar_snr=" << radar_snr
       << ";mainlobe=" << mainlobe_lo << "," << mainlobe_hi;
    return os.str();
}

Scenario sample_scenario(std::uint64_t seed, const ScenarioTemplate& tpl)
{
    tpl.validate();
    std::mt19937_64 rng(seed);
    Scenario s;
    s.n_bs = tpl.n_bs;
    s.m_radar = tpl.m_radar;
    s.p_c = tpl.p_c;
    s.p_r = tpl.p_r;
    s.sigma_b2 = tpl.sigma_b2;
    s.sigma_e2 = tpl.sigma_e2;
    s.sigma_r2 = tpl.sigma_r2;
    s.h_bar_b = gaussian_vector(tpl.n_bs, tpl.rho1, rng);
    s.h_bar_e = gaussian_vector(tpl.n_bs, tpl.rho1, rng);
    s.f_bar_b = gaussian_vector(tpl.m_radar, tpl.rho2, rng);
    s.f_bar_e = gaussian_vector(tpl.m_radar, tpl.rho2, rng);
    for (int m = 0; m < tpl.m_radar; ++m)
        s.g_bar.push_back(gaussian_vector(tpl.n_bs, tpl.rho2, rng));
    s.eps_hb = std::sqrt(tpl.eps2_hb * tpl.rho1);
    s.eps_he = std::sqrt(tpl.eps2_he * tpl.rho1);
    s.eps_fb = std::sqrt(tpl.eps2_fb * tpl.rho2);
    s.eps_fe = std::sqrt(tpl.eps2_fe * tpl.rho2);
    s.eps_gm = std::sqrt(tpl.eps2_gm * tpl.rho2);
    s.gamma_p = tpl.gamma_p_ratio * tpl.p_r;
    s.gamma_inr = RVector::Constant(tpl.m_radar, tpl.gamma_inr);
    s.p_fa = tpl.p_fa;
    s.pulse_len = tpl.pulse_len;
    s.alpha_mag2 = tpl.alpha_mag2();
    s.mainlobe_lo = tpl.mainlobe_lo;
    s.mainlobe_hi = tpl.mainlobe_hi;
    return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
    // splitmix64 finalizer over a combined word
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string digest(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double x) { return 10.0 * std::log10(x); }

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace
{

struct Quantity
{
    double value = 0.0;
    std::string unit;
};

Quantity parse_quantity(const std::string& key, const std::string& text)
{
    std::istringstream is(text);
    Quantity q;
    if (!(is >> q.value))
        throw std::invalid_argument("config: " + key + ": cannot parse number from '" + text + "'");
    is >> q.unit;
    std::string extra;
    if (is >> extra)
        throw std::invalid_argument("config: " + key + ": trailing text in '" + text + "'");
    if (!std::isfinite(q.value))
        throw std::invalid_argument("config: " + key + ": value must be finite");
    return q;
}

double parse_power(const std::string& key, const std::string& text)
{
    const Quantity q = parse_quantity(key, text);
    if (q.unit.empty() || q.unit == "W")
        return q.value;
    if (q.unit == "mW")
        return q.value * 1e-3;
    if (q.unit == "dBm")
        return dbm_to_watt(q.value);
    if (q.unit == "dBW")
        return db_to_linear(q.value);
    throw std::invalid_argument("config: " + key + ": unknown power unit '" + q.unit + "'");
}

// dB and dBm are both read as a power ratio in dB (INR and SNR are unitless).
double parse_ratio(const std::string& key, const std::string& text)
{
    const Quantity q = parse_quantity(key, text);
    if (q.unit.empty())
        return q.value;
    if (q.unit == "dB" || q.unit == "dBm")
        return db_to_linear(q.value);
    throw std::invalid_argument("config: " + key + ": unknown ratio unit '" + q.unit + "'");
}

double parse_plain(const std::string& key, const std::string& text)
{
    const Quantity q = parse_quantity(key, text);
    if (!q.unit.empty())
        throw std::invalid_argument("config: " + key + ": unexpected unit '" + q.unit + "'");
    return q.value;
}

int parse_count(const std::string& key, const std::string& text)
{
    const double v = parse_plain(key, text);
    if (v != std::floor(v) || v < 1.0 || v > 4096.0)
        throw std::invalid_argument("config: " + key + ": expected a positive integer");
    return static_cast<int>(v);
}

}  // namespace

void set_template_field(ScenarioTemplate& tpl, const std::string& key, const std::string& value)
{
    if (key == "n_bs")
        tpl.n_bs = parse_count(key, value);
    else if (key == "m_radar")
        tpl.m_radar = parse_count(key, value);
    else if (key == "p_c")
        tpl.p_c = parse_power(key, value);
    else if (key == "p_r")
        tpl.p_r = parse_power(key, value);
    else if (key == "noise")
        tpl.sigma_b2 = tpl.sigma_e2 = tpl.sigma_r2 = parse_power(key, value);
    else if (key == "sigma_b2")
        tpl.sigma_b2 = parse_power(key, value);
    else if (key == "sigma_e2")
        tpl.sigma_e2 = parse_power(key, value);
    else if (key == "sigma_r2")
        tpl.sigma_r2 = parse_power(key, value);
    else if (key == "rho1")
        tpl.rho1 = parse_plain(key, value);
    else if (key == "rho2")
        tpl.rho2 = parse_plain(key, value);
    else if (key == "eps2")
        tpl.eps2_hb = tpl.eps2_he = tpl.eps2_fb = tpl.eps2_fe = tpl.eps2_gm = parse_plain(key, value);
    else if (key == "eps2_hb")
        tpl.eps2_hb = parse_plain(key, value);
    else if (key == "eps2_he")
        tpl.eps2_he = parse_plain(key, value);
    else if (key == "eps2_fb")
        tpl.eps2_fb = parse_plain(key, value);
    else if (key == "eps2_fe")
        tpl.eps2_fe = parse_plain(key, value);
    else if (key == "eps2_gm")
        tpl.eps2_gm = parse_plain(key, value);
    else if (key == "gamma_p")
    {
        const Quantity q = parse_quantity(key, value);
        if (!q.unit.empty() && q.unit != "P_R" && q.unit != "p_r")
            throw std::invalid_argument("config: gamma_p is a multiple of p_r (write e.g. '0.1 P_R')");
        tpl.gamma_p_ratio = q.value;
    }
    else if (key == "gamma_inr")
        tpl.gamma_inr = parse_ratio(key, value);
    else if (key == "p_fa")
        tpl.p_fa = parse_plain(key, value);
    else if (key == "pulse_len")
        tpl.pulse_len = parse_plain(key, value);
    else if (key == "radar_snr")
        tpl.radar_snr = parse_ratio(key, value);
    else if (key == "mainlobe")
    {
        std::istringstream is(value);
        double lo = 0.0;
        double hi = 0.0;
        std::string extra;
        if (!(is >> lo >> hi) || (is >> extra))
            throw std::invalid_argument("config: mainlobe expects two angles in degrees, e.g. '80 100'");
        tpl.mainlobe_lo = lo;
        tpl.mainlobe_hi = hi;
    }
    else
        throw std::invalid_argument("config: unknown scenario key '" + key + "'");
}

std::map<std::string, ConfigSection> read_config_sections(std::istream& in)
{
    std::stringstream filtered;
    std::string line;
    while (std::getline(in, line))
    {
        const auto cut = line.find_first_of(";#");
        if (cut != std::string::npos)
            line.erase(cut);
        filtered << line << '\n';
    }
    boost::property_tree::ptree tree;
    try
    {
        boost::property_tree::read_ini(filtered, tree);
    }
    catch (const boost::property_tree::ini_parser_error& e)
    {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    std::map<std::string, ConfigSection> out;
    for (const auto& [name, section] : tree)
    {
        ConfigSection& keys = out[name];
        for (const auto& [key, node] : section)
            keys.emplace_back(key, node.data());
    }
    return out;
}

ScenarioTemplate parse_scenario_template(std::istream& in)
{
    const auto sections = read_config_sections(in);
    ScenarioTemplate tpl;
    if (const auto it = sections.find("scenario"); it != sections.end())
    {
        for (const auto& [key, value] : it->second)
            set_template_field(tpl, key, value);
    }
    tpl.validate();
    return tpl;
}

ScenarioTemplate load_scenario_template(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open '" + path + "'");
    return parse_scenario_template(in);
}

}  // namespace rcc
