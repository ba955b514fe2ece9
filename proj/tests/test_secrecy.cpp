// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "oracles.hpp"
#include "rcc/secrecy.hpp"

#include <cmath>
#include <random>

using namespace rcc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

Scenario small_scenario(std::uint64_t seed, int n, int m, double eps2)
{
    ScenarioTemplate tpl;
    tpl.n_bs = n;
    tpl.m_radar = m;
    tpl.eps2_hb = tpl.eps2_he = tpl.eps2_fb = tpl.eps2_fe = tpl.eps2_gm = eps2;
    return sample_scenario(seed, tpl);
}

}  // namespace

TEST_CASE("SINR examples", "[secrecy]")
{
    std::mt19937_64 rng(1);
    const CVector h = oracle::random_complex(4, rng);
    const CVector f = oracle::random_complex(16, rng);
    const CMatrix r = oracle::random_psd(16, rng);
    CHECK(sinr_bob(h, f, CMatrix::Zero(4, 4), r, 1e-3) == 0.0);

    const CVector t = oracle::random_complex(4, rng);
    CHECK_THAT(sinr_bob(h, f, t * t.adjoint(), CMatrix::Zero(16, 16), 0.5),
               WithinRel(std::norm(h.dot(t)) / 0.5, 1e-12));

    // h ⟂ t
    CVector tp = t - (h.dot(t) / h.squaredNorm()) * h;
    CHECK_THAT(sinr_eve(h, f, tp * tp.adjoint(), r, 1e-3), WithinAbs(0.0, 1e-12));
}

TEST_CASE("secrecy rate on constructed channels", "[secrecy]")
{
    Scenario s = with_zero_radii(small_scenario(2, 1, 1, 0.0));
    s.sigma_b2 = s.sigma_e2 = 1.0;
    ChannelRealization real = nominal_realization(s);
    real.h_b(0) = std::sqrt(3.0);
    real.h_e(0) = 1.0;
    real.f_b(0) = 0.0;
    real.f_e(0) = 0.0;
    const CMatrix t = CMatrix::Identity(1, 1);
    const CMatrix r = CMatrix::Identity(1, 1);
    const SecrecyReport rep = secrecy_rate(real, t, r, s);
    CHECK_THAT(rep.gamma_b, WithinRel(3.0, 1e-14));
    CHECK_THAT(rep.gamma_e, WithinRel(1.0, 1e-14));
    CHECK_THAT(rep.secrecy_rate, WithinAbs(1.0, 1e-14));
    CHECK_FALSE(rep.worst_case);

    std::swap(real.h_b, real.h_e);
    const SecrecyReport clamped = secrecy_rate(real, t, r, s);
    CHECK(clamped.secrecy_rate == 0.0);
    CHECK(clamped.difference < 0.0);

    CHECK(secrecy_rate(nominal_realization(s), CMatrix::Zero(1, 1), r, s).secrecy_rate == 0.0);
}

TEST_CASE("exact ball minimum agrees with brute force", "[secrecy]")
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial)
    {
        const int n = 1 + trial % 2;
        const CMatrix a = oracle::random_psd(n, rng, 1 + trial % n);
        const CVector c = oracle::random_complex(n, rng);
        const double r = 0.2 + 0.1 * (trial % 7);
        const BallExtreme lo = min_quadratic_on_ball(a, c, r);
        const double brute = oracle::brute_force_min_quadratic(a, c, r, 40);
        CHECK((lo.point - c).norm() <= r * (1.0 + 1e-12));
        CHECK(lo.value <= brute + 1e-12);
        CHECK_THAT(lo.value, WithinAbs(brute, 2e-3 * (1.0 + std::abs(brute))));

        const BallExtreme hi = max_quadratic_on_ball(a, c, r);
        const double brute_hi = -oracle::brute_force_min_quadratic(-a, c, r, 40);
        CHECK((hi.point - c).norm() <= r * (1.0 + 1e-12));
        CHECK(hi.value >= brute_hi - 1e-12);
        CHECK_THAT(hi.value, WithinAbs(brute_hi, 2e-3 * (1.0 + std::abs(brute_hi))));
    }
}

TEST_CASE("exact ball extremes: closed forms and hard case", "[secrecy]")
{
    // identity form: min (‖c‖ − r)², max (‖c‖ + r)²
    std::mt19937_64 rng(4);
    const CVector c = oracle::random_complex(5, rng);
    const CMatrix id = CMatrix::Identity(5, 5);
    CHECK_THAT(min_quadratic_on_ball(id, c, 0.3).value, WithinRel(std::pow(c.norm() - 0.3, 2), 1e-10));
    CHECK_THAT(max_quadratic_on_ball(id, c, 0.3).value, WithinRel(std::pow(c.norm() + 0.3, 2), 1e-10));
    CHECK(min_quadratic_on_ball(id, c, 2.0 * c.norm()).value == 0.0);

    // rank one: min max(0, |vᴴc| − r‖v‖)², max (|vᴴc| + r‖v‖)²
    const CVector v = oracle::random_complex(5, rng);
    const CMatrix a = v * v.adjoint();
    const double proj = std::abs(v.dot(c));
    CHECK_THAT(max_quadratic_on_ball(a, c, 0.25).value, WithinRel(std::pow(proj + 0.25 * v.norm(), 2), 1e-9));
    const double lo = std::pow(std::max(0.0, proj - 0.25 * v.norm()), 2);
    CHECK_THAT(min_quadratic_on_ball(a, c, 0.25).value, WithinAbs(lo, 1e-9 * (1.0 + lo)));

    // hard case: center orthogonal to the top eigenvector
    RVector d(3);
    d << 5.0, 1.0, 0.5;
    const CMatrix diag = HermitianMatrix::diagonal(d).matrix();
    CVector cc = CVector::Zero(3);
    cc(1) = 0.1;
    const BallExtreme hard = max_quadratic_on_ball(diag, cc, 1.0);
    // best is to spend the radius on the first axis: 5·x₁² + x₂² with x₁² + (x₂ − 0.1)² ≤ 1
    // stationarity gives x₂ = 0.1·5/(5−1) = 0.125, x₁² = 1 − 0.025²
    CHECK_THAT(hard.value, WithinRel(5.0 * (1.0 - 0.025 * 0.025) + 0.125 * 0.125, 1e-9));
    CHECK((hard.point - cc).norm() <= 1.0 + 1e-12);
}

TEST_CASE("oracle with zero radii is the nominal rate", "[secrecy]")
{
    const Scenario s = with_zero_radii(small_scenario(6, 4, 16, 0.0));
    std::mt19937_64 rng(6);
    const CMatrix t = oracle::random_psd(4, rng, 1);
    const CMatrix r = oracle::random_psd(16, rng);
    const SecrecyReport wc = worst_case_secrecy(s, t, r, {.budget = 100});
    const SecrecyReport nom = secrecy_rate(nominal_realization(s), t, r, s);
    CHECK(wc.difference == nom.difference);
    CHECK(wc.worst_case);
}

TEST_CASE("oracle respects balls and never helps Bob", "[secrecy]")
{
    for (std::uint64_t seed = 1; seed <= 8; ++seed)
    {
        const Scenario s = small_scenario(seed, 4, 16, 1e-2);
        std::mt19937_64 rng(seed);
        const CMatrix t = oracle::random_psd(4, rng, 1 + static_cast<int>(seed % 4));
        const CMatrix r = oracle::random_psd(16, rng) * 0.1;
        const SecrecyReport wc = worst_case_secrecy(s, t, r, {.budget = 2000});
        CHECK(ball_excess(s, wc.witness) <= 1.0 + 1e-12);
        const SecrecyReport nom = secrecy_rate(nominal_realization(s), t, r, s);
        CHECK(wc.difference <= nom.difference);
        CHECK(wc.secrecy_rate <= nom.secrecy_rate);
        CHECK(wc.witness.h_b.dot(t * wc.witness.h_b).real() <= s.h_bar_b.dot(t * s.h_bar_b).real() + 1e-12);

        // the witness reproduces the reported value
        const SecrecyReport again = secrecy_rate(wc.witness, t, r, s);
        CHECK_THAT(again.difference, WithinAbs(wc.difference, 1e-12));

        // no random realization beats the oracle
        std::mt19937_64 probe(seed + 100);
        for (int i = 0; i < 2000; ++i)
        {
            const ChannelRealization x = sample_realization(s, i % 2 ? BallMode::interior : BallMode::boundary, probe);
            CHECK(secrecy_rate(x, t, r, s).difference >= wc.difference - 1e-12);
        }
    }
}

TEST_CASE("oracle is monotone in its budget", "[secrecy]")
{
    const Scenario s = small_scenario(31, 4, 16, 1e-2);
    std::mt19937_64 rng(31);
    const CMatrix t = oracle::random_psd(4, rng, 2);
    const CMatrix r = oracle::random_psd(16, rng) * 0.05;
    for (const bool exact : {false, true})
    {
        double previous = std::numeric_limits<double>::infinity();
        for (const int budget : {1, 10, 100, 1000, 10000})
        {
            const double v = worst_case_secrecy(s, t, r, {.budget = budget, .exact_candidates = exact}).difference;
            CHECK(v <= previous + 1e-12);
            previous = v;
        }
        // pure sampling plus refinement lands on the exact worst case
        if (!exact)
            CHECK_THAT(previous, WithinAbs(worst_case_secrecy_exact(s, t, r).difference, 1e-6));
    }
    CHECK_THROWS(worst_case_secrecy(s, t, r, {.budget = 0}));
}

TEST_CASE("oracle finds the zero-rate attack when the ball covers the origin", "[secrecy]")
{
    Scenario s = small_scenario(5, 4, 16, 1e-2);
    s.eps_hb = 1.01 * s.h_bar_b.norm();
    const CMatrix t = s.h_bar_b * s.h_bar_b.adjoint();
    const CMatrix r = CMatrix::Identity(16, 16) * 0.01;
    const SecrecyReport wc = worst_case_secrecy(s, t, r, {.budget = 500});
    CHECK_THAT(wc.gamma_b, WithinAbs(0.0, 1e-12));
    CHECK(wc.secrecy_rate == 0.0);
}

TEST_CASE("small instance against a dense grid over ball boundaries", "[secrecy]")
{
    // N = 2, M = 2: every ball is in C² and the grid oracle covers it densely
    const Scenario s = small_scenario(77, 2, 2, 0.05);
    std::mt19937_64 rng(77);
    const CMatrix t = oracle::random_psd(2, rng, 2);
    const CMatrix r = oracle::random_psd(2, rng) * 0.3;

    const double hb = oracle::brute_force_min_quadratic(t, s.h_bar_b, s.eps_hb, 60);
    const double fb = -oracle::brute_force_min_quadratic(-r, s.f_bar_b, s.eps_fb, 60);
    const double he = -oracle::brute_force_min_quadratic(-t, s.h_bar_e, s.eps_he, 60);
    const double fe = oracle::brute_force_min_quadratic(r, s.f_bar_e, s.eps_fe, 60);
    const double grid = std::log2(1.0 + hb / (fb + s.sigma_b2)) - std::log2(1.0 + he / (fe + s.sigma_e2));

    const SecrecyReport wc = worst_case_secrecy(s, t, r, {.budget = 1000000, .exact_candidates = false});
    CHECK_THAT(wc.difference, WithinAbs(grid, 1e-3));
    CHECK(wc.difference <= grid + 1e-9);
}
