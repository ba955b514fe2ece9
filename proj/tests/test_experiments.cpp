// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "rcc/experiments.hpp"
#include "rcc/radar.hpp"
#include "rcc/secrecy.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace rcc;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace fs = std::filesystem;

namespace
{

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("rcc_test_" + name);
    fs::remove_all(p);
    return p;
}

// Small instances that still exercise every path.
ExperimentConfig small_config(const std::string& out)
{
    ExperimentConfig cfg;
    cfg.scenario.n_bs = 2;
    cfg.scenario.m_radar = 2;
    cfg.trials = 2;
    cfg.seed = 11;
    cfg.out_dir = out;
    cfg.pc_dbm = {24.0, 30.0};
    cfg.eps2_values = {0.0, 1e-2};
    cfg.gamma_p_ratios = {0.1, 1.0};
    cfg.gamma_inr_db = {-10.0, -5.0};
    cfg.tradeoff_gamma_p_ratios = {0.1, 1.0};
    cfg.design.coarse_points = 12;
    cfg.design.refinement = 1;
    cfg.design.extraction.candidates = 100;
    cfg.oracle_budget = 200;
    cfg.falsifier_samples = 500;
    cfg.quiet = true;
    return cfg;
}

std::vector<std::string> data_lines(const fs::path& p)
{
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#')
            out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("config file parsing", "[experiments]")
{
    std::istringstream in(R"(
[scenario]
n_bs = 2
m_radar = 3
p_c = 27 dBm
eps2 = 1e-3      ; all five balls
gamma_inr = -5 dB

[experiment]
trials = 7
seed = 99
jobs = 2
out = results
pc_dbm = 20, 25 30
eps2_values = 0 1e-2
prune = false
candidates = 50
falsifier_samples = 123
)");
    const ExperimentConfig cfg = parse_experiment_config(in);
    CHECK(cfg.scenario.n_bs == 2);
    CHECK(cfg.scenario.m_radar == 3);
    CHECK_THAT(cfg.scenario.p_c, WithinRel(dbm_to_watt(27.0), 1e-12));
    CHECK(cfg.scenario.eps2_gm == 1e-3);
    CHECK_THAT(cfg.scenario.gamma_inr, WithinRel(db_to_linear(-5.0), 1e-12));
    CHECK(cfg.trials == 7);
    CHECK(cfg.seed == 99);
    CHECK(cfg.jobs == 2);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.pc_dbm == std::vector<double>{20.0, 25.0, 30.0});
    CHECK(cfg.eps2_values == std::vector<double>{0.0, 1e-2});
    CHECK_FALSE(cfg.design.prune);
    CHECK(cfg.design.extraction.candidates == 50);
    CHECK(cfg.falsifier_samples == 123);

    auto parse = [](const std::string& text) {
        std::istringstream s(text);
        return parse_experiment_config(s);
    };
    CHECK_THROWS_WITH(parse("[experiment]\ntrail = 3\n"), ContainsSubstring("trail"));
    CHECK_THROWS_WITH(parse("[sweep]\nx = 1\n"), ContainsSubstring("[sweep]"));
    CHECK_THROWS_WITH(parse("[experiment]\ntrials = 0\n"), ContainsSubstring("trials"));
    CHECK_THROWS_WITH(parse("[experiment]\npc_dbm = 20 abc\n"), ContainsSubstring("pc_dbm"));
    CHECK_THROWS_WITH(parse("[experiment]\neps2_values = -1e-3\n"), ContainsSubstring("eps2_values"));
    CHECK_THROWS_WITH(parse("[experiment]\nprune = maybe\n"), ContainsSubstring("prune"));
}

TEST_CASE("defaults and the shipped config are the paper setting", "[experiments]")
{
    const ExperimentConfig d;
    CHECK(d.scenario.n_bs == 4);
    CHECK(d.scenario.m_radar == 16);
    CHECK_THAT(watt_to_dbm(d.scenario.p_r), WithinAbs(43.0, 1e-9));
    CHECK_THAT(watt_to_dbm(d.scenario.p_c), WithinAbs(30.0, 1e-9));
    CHECK_THAT(watt_to_dbm(d.scenario.sigma_b2), WithinAbs(0.0, 1e-9));
    CHECK(d.scenario.gamma_p_ratio == 0.1);
    CHECK_THAT(d.scenario.gamma_inr, WithinRel(0.1, 1e-12));
    CHECK(d.scenario.eps2_hb == 1e-2);
    CHECK(d.scenario.mainlobe_lo == 80.0);
    CHECK(d.scenario.mainlobe_hi == 100.0);
    CHECK(d.trials == 200);

    const ExperimentConfig shipped = load_experiment_config(RCC_SOURCE_DIR "/configs/paper_default.cfg");
    CHECK(shipped.canonical() == d.canonical());
}

TEST_CASE("canonical text tracks results, not scheduling", "[experiments]")
{
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.jobs = 8;
    b.out_dir = "elsewhere";
    b.stop_after = 3;
    CHECK(a.canonical() == b.canonical());
    b.trials = 201;
    CHECK(a.canonical() != b.canonical());
    ExperimentConfig c = a;
    c.scenario.eps2_fe = 2e-2;
    CHECK(a.canonical() != c.canonical());
}

TEST_CASE("falsifier against exact ball extremes", "[experiments]")
{
    ScenarioTemplate tpl;
    tpl.n_bs = 3;
    tpl.m_radar = 2;
    const Scenario s = sample_scenario(5, tpl);
    const CVector t = s.h_bar_b / s.h_bar_b.norm() * 0.01;
    const CMatrix T = t * t.adjoint();
    const CMatrix R = (tpl.p_r / 2.0) * CMatrix::Identity(2, 2);

    const FalsifierReport f = falsify(s, T, R, -std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity(), 4000, 1);
    CHECK(f.passed());
    // exact extremes bound every sample
    const double bob_min = min_quadratic_on_ball(T, s.h_bar_b, s.eps_hb).value /
                           (max_quadratic_on_ball(R, s.f_bar_b, s.eps_fb).value + s.sigma_b2);
    const double eve_max = max_quadratic_on_ball(T, s.h_bar_e, s.eps_he).value /
                           (min_quadratic_on_ball(R, s.f_bar_e, s.eps_fe).value + s.sigma_e2);
    CHECK(f.bob_min_sinr >= bob_min * (1.0 - 1e-12));
    CHECK(f.eve_max_sinr <= eve_max * (1.0 + 1e-12));
    CHECK(f.bob_min_sinr <= sinr_bob(s.h_bar_b, s.f_bar_b, T, R, s.sigma_b2));

    // caps placed just inside the sampled extremes are reported as violated
    const FalsifierReport g = falsify(s, T, R, f.bob_min_sinr + 1e-3, f.eve_max_sinr - 1e-3, 4000, 1);
    CHECK_FALSE(g.bob_ok);
    CHECK_FALSE(g.eve_ok);
    const FalsifierReport h = falsify(s, 1e6 * T, R, -std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity(), 100, 1);
    CHECK_FALSE(h.inr_ok);
    CHECK_THROWS(falsify(s, T, R, 0.0, 1.0, 0, 1));
}

TEST_CASE("spearman correlation", "[experiments]")
{
    CHECK_THAT(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), WithinAbs(1.0, 1e-15));
    CHECK_THAT(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), WithinAbs(-1.0, 1e-15));
    // ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4)
    CHECK_THAT(spearman({1, 5, 5, 9}, {1, 2, 3, 4}), WithinAbs(4.5 / std::sqrt(4.5 * 5.0), 1e-12));
    CHECK(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
    CHECK_THROWS(spearman({1, 2}, {1}));
}

TEST_CASE("secrecy-vs-power batches are deterministic and resumable", "[experiments]")
{
    const fs::path a = scratch("sp_a");
    const fs::path b = scratch("sp_b");
    const fs::path c = scratch("sp_c");

    ExperimentConfig cfg = small_config(a.string());
    const ExperimentResult ra = run_secrecy_vs_power(cfg);
    REQUIRE(ra.complete);
    // cells: (24, 1e-2), (30, 1e-2), (30, 0) with the duplicate merged
    CHECK(ra.tasks_total == 3 * cfg.trials);
    const std::string full = slurp(ra.csv_path);
    CHECK(full.rfind("# rcc " + code_version() + " experiment=secrecy-vs-power config_digest=" +
                         digest(cfg.canonical()) + "\n",
                     0) == 0);
    CHECK(data_lines(ra.csv_path).size() == 1 + 2 * static_cast<std::size_t>(ra.tasks_total));

    SECTION("same config, same bytes, any worker count")
    {
        cfg.out_dir = b.string();
        cfg.jobs = 3;
        CHECK(slurp(run_secrecy_vs_power(cfg).csv_path) == full);
    }
    SECTION("interrupted then resumed equals uninterrupted")
    {
        cfg.out_dir = c.string();
        cfg.stop_after = 2;
        const ExperimentResult part = run_secrecy_vs_power(cfg);
        CHECK_FALSE(part.complete);
        CHECK(part.tasks_run == 2);
        // a torn trailing line from a crash is dropped on resume
        {
            std::ofstream torn(part.csv_path, std::ios::app | std::ios::binary);
            torn << "2,1,30,0.01,0,123";
        }
        cfg.stop_after = -1;
        const ExperimentResult rest = run_secrecy_vs_power(cfg);
        CHECK(rest.complete);
        CHECK(rest.tasks_resumed == 2);
        CHECK(rest.tasks_run == ra.tasks_total - 2);
        CHECK(slurp(rest.csv_path) == full);
        CHECK(rest.summary.dump() == ra.summary.dump());

        // a finished batch resumes to itself
        const ExperimentResult again = run_secrecy_vs_power(cfg);
        CHECK(again.tasks_run == 0);
        CHECK(slurp(again.csv_path) == full);

        // a different configuration refuses to append
        cfg.seed = 12;
        CHECK_THROWS_WITH(run_secrecy_vs_power(cfg), ContainsSubstring("different configuration"));
    }
    SECTION("summary")
    {
        const auto& cells = ra.summary.at("cells");
        REQUIRE(cells.size() == 3);
        for (const auto& cell : cells)
        {
            CHECK(cell.at("robust").at("trials").get<int>() + cell.at("robust").at("excluded").get<int>() == 2);
            if (cell.at("eps2").get<double>() == 0.0)
            {
                // zero radii: both designs solve the same problem
                CHECK(cell.at("max_paired_gap").get<double>() <= 1e-9);
                CHECK(cell.at("robust").at("mean_worst_case_rate") == cell.at("non_robust").at("mean_worst_case_rate"));
            }
        }
        CHECK(ra.summary.at("trends").contains("robust_exceeds_non_robust_every_pc"));
        CHECK(fs::exists(ra.summary_path));
    }
}

TEST_CASE("zero radii: robust and non-robust rows coincide", "[experiments]")
{
    const fs::path out = scratch("zero");
    ExperimentConfig cfg = small_config(out.string());
    cfg.pc_dbm = {30.0};
    cfg.power_sweep_eps2 = 0.0;
    cfg.eps2_values = {0.0};
    const ExperimentResult r = run_secrecy_vs_power(cfg);
    const auto lines = data_lines(r.csv_path);
    REQUIRE(lines.size() == 1 + 2 * static_cast<std::size_t>(cfg.trials));
    for (std::size_t i = 1; i < lines.size(); i += 2)
    {
        std::string rob = lines[i];
        std::string non = lines[i + 1];
        rob.replace(rob.find(",robust,"), 8, ",X,");
        non.replace(non.find(",non-robust,"), 12, ",X,");
        CHECK(rob == non);
    }
}

TEST_CASE("beampattern experiment", "[experiments]")
{
    const fs::path out = scratch("bp");
    ExperimentConfig cfg = small_config(out.string());
    cfg.scenario.m_radar = 4;
    cfg.trials = 1;
    cfg.gamma_p_ratios = {0.0, 0.1, 1.0};
    const ExperimentResult r = run_beampattern_experiment(cfg);
    REQUIRE(r.complete);
    CHECK(data_lines(r.csv_path).size() == 1 + 360 * 4);

    const auto& curves = r.summary.at("curves");
    REQUIRE(curves.size() == 3);
    // γ_p = 0 pins R_x to R_d
    REQUIRE(curves[0].at("designs").get<int>() == 1);
    CHECK(curves[0].at("mean_relative_mismatch").get<double>() <= 1e-4);
    CHECK_THAT(curves[0].at("mainlobe_gap_db").get<double>(), WithinAbs(0.0, 1e-3));
    for (const auto& c : curves)
        CHECK(c.at("mean_mismatch").get<double>() <=
              std::sqrt(c.at("gamma_p_ratio").get<double>() * cfg.scenario.p_r) + 1e-6);

    // reference curve against a direct evaluation
    const CMatrix r_d = design_ideal_covariance(mainlobe_mask(80, 100), cfg.scenario.p_r, 4).r_d.matrix();
    CHECK_THAT(r.summary.at("reference").at("frobenius_norm").get<double>(), WithinRel(r_d.norm(), 1e-9));
    const auto lines = data_lines(r.csv_path);
    CHECK(lines[1].rfind("0,reference,", 0) == 0);
    CHECK(lines[1 + 90].find(",90," + std::string()) != std::string::npos);
}

TEST_CASE("trade-off experiment", "[experiments]")
{
    const fs::path out = scratch("tr");
    ExperimentConfig cfg = small_config(out.string());
    const ExperimentResult r = run_tradeoff_experiment(cfg);
    REQUIRE(r.complete);
    CHECK(r.tasks_total == 2 * 2 * cfg.trials);
    CHECK(data_lines(r.csv_path).size() == 1 + static_cast<std::size_t>(r.tasks_total));
    const auto& curves = r.summary.at("curves");
    REQUIRE(curves.size() == 2);
    for (const auto& c : curves)
    {
        REQUIRE(c.at("points").size() == 2);
        for (const auto& p : c.at("points"))
        {
            const double pd = p.at("mean_p_d").get<double>();
            CHECK(pd >= cfg.scenario.p_fa);
            CHECK(pd <= 1.0);
        }
    }
    REQUIRE(r.summary.at("dominance").size() == 1);
    CHECK(r.summary.at("trends").contains("larger_gamma_inr_dominates"));
}

TEST_CASE("no eavesdropper and no radar coupling: the design is MRT", "[experiments]")
{
    // Eve's channel is zero, Bob sees no radar interference, and Γ_m grows:
    // the secrecy rate approaches log₂(1 + P_C‖h_b‖²/σ_b²).
    ScenarioTemplate tpl;
    tpl.n_bs = 3;
    tpl.m_radar = 2;
    tpl.eps2_hb = tpl.eps2_he = tpl.eps2_fb = tpl.eps2_fe = tpl.eps2_gm = 0.0;
    Scenario s = sample_scenario(21, tpl);
    s.h_bar_e.setZero();
    s.f_bar_b.setZero();
    const double mrt = std::log2(1.0 + s.p_c * s.h_bar_b.squaredNorm() / s.sigma_b2);
    const CMatrix r_d = design_ideal_covariance(mainlobe_mask(80, 100), s.p_r, s.m_radar).r_d.matrix();

    DesignOptions opt;
    opt.coarse_points = 8;
    opt.refinement = 1;
    double previous = -1.0;
    for (const double gamma : {1e-2, 1.0, 1e2, 1e8})
    {
        s.gamma_inr = RVector::Constant(s.m_radar, gamma);
        const DesignSolution d = run_design(s, r_d, opt);
        REQUIRE(d.status == DesignStatus::optimal);
        INFO("gamma " << gamma << " rate " << d.worst_case_rate << " mrt " << mrt);
        CHECK(d.worst_case_rate <= mrt + 1e-6);
        CHECK(d.worst_case_rate >= previous - 1e-6);
        previous = d.worst_case_rate;
        if (gamma == 1e8)
        {
            CHECK_THAT(d.worst_case_rate, WithinAbs(mrt, 1e-5));
            // the beamformer is matched to h_b
            const double align = std::abs(s.h_bar_b.dot(d.t)) / (s.h_bar_b.norm() * d.t.norm());
            CHECK_THAT(align, WithinAbs(1.0, 1e-6));
        }
    }
}

TEST_CASE("single solve: paper default", "[experiments]")
{
    const fs::path out = scratch("single");
    ExperimentConfig cfg;
    cfg.out_dir = out.string();
    cfg.kind = ExperimentKind::single;
    std::ostringstream text;
    const SingleReport rep = run_single(cfg, text);
    INFO(text.str());
    CHECK(rep.verdict == "optimal");
    CHECK(rep.design.status == DesignStatus::optimal);
    CHECK(rep.sdr_certificate.passed());
    CHECK(rep.design_certificate.passed());
    CHECK(rep.metrics.certified);
    CHECK(rep.sdr_certificate.samples == 10000);
    CHECK_THAT(text.str(), ContainsSubstring("verdict      optimal"));
    CHECK(rep.json.at("design").at("per_mu_trace").size() == rep.design.per_mu_trace.size());

    // repeat: byte-identical CSV
    const std::string first = slurp(out / "single.csv");
    std::ostringstream again;
    run_single(cfg, again);
    CHECK(slurp(out / "single.csv") == first);
}

TEST_CASE("single solve: over-constrained radar cap", "[experiments]")
{
    const fs::path out = scratch("single_oc");
    ExperimentConfig cfg;
    cfg.out_dir = out.string();
    cfg.scenario.gamma_inr = db_to_linear(-80.0);
    cfg.design.coarse_points = 16;
    cfg.design.refinement = 1;
    std::ostringstream text;
    const SingleReport rep = run_single(cfg, text);
    INFO(text.str());
    CHECK(rep.verdict == "over-constrained");
    CHECK_THAT(rep.diagnosis, ContainsSubstring("INR cap"));
    CHECK(rep.design.secrecy_bound() < 1e-3);
    // still sound: nothing violates the caps
    CHECK(rep.sdr_certificate.inr_ok);
    CHECK(rep.design_certificate.passed());
}

TEST_CASE("selftest", "[experiments]")
{
    std::ostringstream out;
    CHECK(run_selftest(out) == 0);
    CHECK_THAT(out.str(), ContainsSubstring("selftest design: pass"));
}
