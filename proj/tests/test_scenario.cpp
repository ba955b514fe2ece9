// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "rcc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace rcc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("steering vector examples", "[scenario]")
{
    const CVector a0 = steering_vector(0.0, 4);
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(a0(k) - cplx(1.0, 0.0)) <= 1e-15);

    const CVector a90 = steering_vector(90.0, 4);
    const double expect[] = {1.0, -1.0, 1.0, -1.0};
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(a90(k) - cplx(expect[k], 0.0)) <= 1e-14);

    const CVector a30 = steering_vector(30.0, 2);
    CHECK(std::abs(a30(1) - cplx(0.0, 1.0)) <= 1e-14);

    for (double theta = -180.0; theta <= 360.0; theta += 7.3)
    {
        const CVector a = steering_vector(theta, 16);
        CHECK(((a.array().abs() - 1.0).abs() <= 1e-14).all());
    }
    CHECK_THROWS(steering_vector(10.0, 0));
}

TEST_CASE("scenario sampling is deterministic", "[scenario]")
{
    const ScenarioTemplate tpl;
    const Scenario a = sample_scenario(42, tpl);
    const Scenario b = sample_scenario(42, tpl);
    const Scenario c = sample_scenario(43, tpl);
    CHECK(a.h_bar_b == b.h_bar_b);
    CHECK(a.f_bar_e == b.f_bar_e);
    CHECK(a.g_bar.back() == b.g_bar.back());
    CHECK(a.h_bar_b != c.h_bar_b);
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("nominal channel variances follow the link scales", "[scenario]")
{
    ScenarioTemplate tpl;
    double sum_b = 0.0;
    double sum_f = 0.0;
    int nb = 0;
    int nf = 0;
    for (std::uint64_t seed = 0; seed < 2500; ++seed)
    {
        const Scenario s = sample_scenario(seed, tpl);
        sum_b += s.h_bar_b.squaredNorm();
        nb += s.n_bs;
        sum_f += s.f_bar_b.squaredNorm();
        nf += s.m_radar;
    }
    // 10⁴ entries each: relative standard error of the variance is 1%
    CHECK_THAT(sum_b / nb, WithinRel(1.0, 0.05));
    CHECK_THAT(sum_f / nf, WithinRel(0.02, 0.05));

    tpl.rho2 = 0.0;
    const Scenario z = sample_scenario(7, tpl);
    CHECK(z.f_bar_b.isZero(0.0));
    CHECK(z.f_bar_e.isZero(0.0));
    for (const auto& g : z.g_bar)
        CHECK(g.isZero(0.0));
    CHECK(z.eps_fb == 0.0);
}

TEST_CASE("error radii come from normalized squared radii", "[scenario]")
{
    ScenarioTemplate tpl;
    tpl.eps2_hb = 1e-2;
    tpl.eps2_fb = 1e-3;
    const Scenario s = sample_scenario(1, tpl);
    CHECK_THAT(s.eps_hb * s.eps_hb, WithinRel(1e-2 * tpl.rho1, 1e-12));
    CHECK_THAT(s.eps_fb * s.eps_fb, WithinRel(1e-3 * tpl.rho2, 1e-12));
    CHECK_THAT(s.gamma_p, WithinRel(0.1 * tpl.p_r, 1e-12));
    // radar SNR aggregate: |α|² L p_r M / σ_r²
    CHECK_THAT(s.alpha_mag2 * s.pulse_len * s.p_r * s.m_radar / s.sigma_r2, WithinRel(tpl.radar_snr, 1e-12));
}

TEST_CASE("error ball sampling", "[scenario]")
{
    std::mt19937_64 rng(99);
    const CVector c = CVector::Random(4);
    CHECK(sample_error_ball(c, 0.0, BallMode::interior, rng) == c);
    CHECK(sample_error_ball(c, 0.0, BallMode::boundary, rng) == c);
    CHECK_THROWS(sample_error_ball(c, -1.0, BallMode::interior, rng));

    for (int i = 0; i < 1000; ++i)
        CHECK_THAT((sample_error_ball(c, 0.1, BallMode::boundary, rng) - c).norm(), WithinAbs(0.1, 1e-12));

    CHECK(sample_error_ball(c, 0.3, BallMode::interior, std::uint64_t{5}) ==
          sample_error_ball(c, 0.3, BallMode::interior, std::uint64_t{5}));
}

TEST_CASE("interior samples are uniform in the ball", "[scenario]")
{
    // radial CDF in Cⁿ is (r/ε)^{2n}; Kolmogorov–Smirnov at the 1% level
    std::mt19937_64 rng(2024);
    for (const int n : {1, 4, 16})
    {
        const CVector c = CVector::Zero(n);
        const double eps = 0.7;
        std::vector<double> u;
        const int count = 10000;
        for (int i = 0; i < count; ++i)
        {
            const double r = sample_error_ball(c, eps, BallMode::interior, rng).norm();
            REQUIRE(r <= eps * (1.0 + 1e-15));
            u.push_back(std::pow(r / eps, 2.0 * n));
        }
        std::sort(u.begin(), u.end());
        double d = 0.0;
        for (int i = 0; i < count; ++i)
            d = std::max({d, (i + 1.0) / count - u[static_cast<std::size_t>(i)],
                          u[static_cast<std::size_t>(i)] - static_cast<double>(i) / count});
        INFO("n = " << n << ", KS statistic " << d);
        CHECK(d < 1.63 / std::sqrt(count));

        // directions: mean of the normalized vector is near zero
        CVector mean = CVector::Zero(n);
        for (int i = 0; i < count; ++i)
            mean += sample_error_ball(c, 1.0, BallMode::boundary, rng);
        CHECK(mean.norm() / count < 0.05);
    }
}

TEST_CASE("sampled realizations stay inside every ball", "[scenario]")
{
    const Scenario s = sample_scenario(3, ScenarioTemplate{});
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i)
    {
        CHECK(ball_excess(s, sample_realization(s, BallMode::interior, rng)) <= 1.0);
        CHECK(ball_excess(s, sample_realization(s, BallMode::boundary, rng)) <= 1.0 + 1e-12);
    }
    CHECK(ball_excess(s, nominal_realization(s)) == 0.0);

    ChannelRealization bad = nominal_realization(s);
    bad.h_b(0) += 2.0 * s.eps_hb;
    CHECK(ball_excess(s, bad) > 1.0);

    const Scenario z = with_zero_radii(s);
    ChannelRealization moved = nominal_realization(z);
    moved.g[3](1) += 1e-9;
    CHECK(std::isinf(ball_excess(z, moved)));
}

TEST_CASE("scenario validation names the field", "[scenario]")
{
    Scenario s = sample_scenario(1, ScenarioTemplate{});
    Scenario bad = s;
    bad.p_fa = 1.0;
    CHECK_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("p_fa"));
    bad = s;
    bad.f_bar_e.resize(3);
    CHECK_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("f_bar_e"));
    bad = s;
    bad.eps_gm = -0.1;
    CHECK_THROWS(bad.validate());
    bad = s;
    bad.p_r = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("unit conversions", "[scenario]")
{
    CHECK_THAT(dbm_to_watt(30.0), WithinRel(1.0, 1e-15));
    CHECK_THAT(dbm_to_watt(0.0), WithinRel(1e-3, 1e-15));
    CHECK_THAT(dbm_to_watt(43.0), WithinRel(19.952623149688797, 1e-14));
    CHECK_THAT(watt_to_dbm(dbm_to_watt(27.0)), WithinAbs(27.0, 1e-12));
    CHECK_THAT(db_to_linear(-10.0), WithinRel(0.1, 1e-15));
    CHECK_THAT(linear_to_db(100.0), WithinAbs(20.0, 1e-13));
}

TEST_CASE("config file parsing", "[scenario]")
{
    std::istringstream in(R"(# radar-communication scenario
[scenario]
n_bs = 4
m_radar = 16
p_c = 30 dBm
p_r = 43 dBm
noise = 0 dBm
rho1 = 1
rho2 = 0.02
eps2 = 1e-2
eps2_fe = 1e-3   ; per-ball override
gamma_p = 0.5 P_R
gamma_inr = -10 dBm
p_fa = 1e-4
radar_snr = 2 dB
mainlobe = 80 100

[experiment]
trials = 3
)");
    const ScenarioTemplate tpl = parse_scenario_template(in);
    CHECK(tpl.n_bs == 4);
    CHECK(tpl.m_radar == 16);
    CHECK_THAT(tpl.p_c, WithinRel(1.0, 1e-14));
    CHECK_THAT(tpl.p_r, WithinRel(19.952623149688797, 1e-14));
    CHECK_THAT(tpl.sigma_r2, WithinRel(1e-3, 1e-14));
    CHECK_THAT(tpl.eps2_hb, WithinRel(1e-2, 1e-15));
    CHECK_THAT(tpl.eps2_fe, WithinRel(1e-3, 1e-15));
    CHECK_THAT(tpl.gamma_p_ratio, WithinRel(0.5, 1e-15));
    CHECK_THAT(tpl.gamma_inr, WithinRel(0.1, 1e-14));
    CHECK_THAT(tpl.radar_snr, WithinRel(1.5848931924611136, 1e-14));
    CHECK(tpl.mainlobe_hi == 100.0);

    // defaults equal the shipped paper parameters
    const ScenarioTemplate def;
    std::istringstream empty("[scenario]\n");
    CHECK(parse_scenario_template(empty).canonical() == def.canonical());
}

TEST_CASE("config errors are reported", "[scenario]")
{
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_scenario_template(in);
    };
    CHECK_THROWS_WITH(parse("[scenario]\nbogus = 1\n"), Catch::Matchers::ContainsSubstring("bogus"));
    CHECK_THROWS_WITH(parse("[scenario]\np_c = 30 furlongs\n"), Catch::Matchers::ContainsSubstring("unit"));
    CHECK_THROWS(parse("[scenario]\nn_bs = 2.5\n"));
    CHECK_THROWS(parse("[scenario]\np_fa = 2\n"));
    CHECK_THROWS(parse("[scenario]\nmainlobe = 100 80\n"));
    CHECK_THROWS(parse("[scenario]\np_c = abc\n"));
    CHECK_THROWS(parse("[scenario\np_c = 1\n"));
    CHECK_THROWS(load_scenario_template("/nonexistent/path.cfg"));
}

TEST_CASE("seed derivation and digests", "[scenario]")
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i)
        seen.insert(derive_seed(12345, i));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));

    CHECK(digest("") == "cbf29ce484222325");
    CHECK(digest("a") == "af63dc4c8601ec8c");
    CHECK(digest(ScenarioTemplate{}.canonical()).size() == 16);
}
