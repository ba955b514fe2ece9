// SPDX-License-Identifier: Apache-2.0
#include "rcc/design.hpp"

#include "rcc/secrecy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rcc
{

namespace
{

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double mu_upper_bound(const Scenario& s)
{
    const double h = s.h_bar_b.norm();
    return s.p_c * (h * h + s.eps_hb * s.eps_hb + 2.0 * s.eps_hb * h);
}

double sinr_upper_bound(const Scenario& s)
{
    return mu_upper_bound(s) / s.sigma_b2;
}

double SearchGrid::delta() const
{
    return coarse_points > 1 ? (mu_max - mu_min) / (coarse_points - 1) : 0.0;
}

void SearchGrid::validate() const
{
    if (!(mu_min >= 0.0) || !std::isfinite(mu_min))
        throw std::invalid_argument("SearchGrid: mu_min must be finite and >= 0");
    if (!(mu_max >= mu_min) || !std::isfinite(mu_max))
        throw std::invalid_argument("SearchGrid: mu_max must be finite and >= mu_min");
    if (coarse_points < 1)
        throw std::invalid_argument("SearchGrid: coarse_points must be >= 1");
    if (coarse_points > 1 && !(delta() > 0.0))
        throw std::invalid_argument("SearchGrid: delta must be > 0");
    if (refinement < 0)
        throw std::invalid_argument("SearchGrid: refinement must be >= 0");
}

// ---------------------------------------------------------------------------
// Inner problem
// ---------------------------------------------------------------------------

InnerOutcome inner_solve(const Scenario& s, const CMatrix& r_d, double mu, const InnerOptions& options)
{
    if (!(mu >= 0.0) || !std::isfinite(mu))
        throw std::invalid_argument("inner_solve: mu must be finite and >= 0");
    s.validate();
    options.assembly.validate();
    options.solver.validate();

    const auto start = Clock::now();
    InnerOutcome out;
    out.mu = mu;

    // The beamformer is forced to zero: with μ = 0 every Eve channel in a
    // nonempty ball must see no power, and a ball spans all directions.
    const bool eve_blocks_all = mu == 0.0 && s.eps_he > 0.0 && !options.assembly.omit_eve;
    if (s.p_c == 0.0 || eve_blocks_all)
    {
        const double worst = max_quadratic_on_ball(r_d, s.f_bar_b, s.eps_fb).value;
        out.feasible = true;
        out.shortcut = true;
        out.status = SolverStatus::optimal;
        out.gamma_b = 0.0;
        out.zeta = 1.0 / (worst + s.sigma_b2);
        out.t_hat = CMatrix::Zero(s.n_bs, s.n_bs);
        out.rx_hat = out.zeta * r_d;
        out.diagnostic = s.p_c == 0.0 ? "zero power budget" : "Eve ball forces a zero beamformer";
        out.seconds = elapsed(start);
        return out;
    }

    const InnerProgram ip = assemble_inner(s, r_d, mu, options.assembly);
    SolverSolution sol = solve(ip.program, options.solver);
    out.iterations = sol.iterations;
    if (sol.status == SolverStatus::numerical_failure || sol.status == SolverStatus::iteration_limit)
    {
        SolverConfig retry = options.solver;
        retry.regularization = std::max(retry.regularization, 1e-9);
        retry.max_iters = std::max(retry.max_iters, 400);
        sol = solve(ip.program, retry);
        out.retried = true;
        out.iterations += sol.iterations;
    }
    out.status = sol.status;
    out.diagnostic = sol.diagnostic;
    if (sol.optimal())
    {
        const auto& l = ip.layout;
        out.feasible = true;
        out.gamma_b = std::max(0.0, sol.x(l.eta));
        out.zeta = sol.x(l.zeta);
        out.t_hat = t_hat_value(ip, sol.x);
        out.rx_hat = rx_hat_value(ip, r_d, sol.x);
        out.max_violation = certify(ip.program, sol.x).max_violation;
    }
    out.seconds = elapsed(start);
    return out;
}

Recovered recover(const CMatrix& t_hat, const CMatrix& rx_hat, double zeta, double zeta_min)
{
    if (!(zeta > 0.0) || !std::isfinite(zeta))
        throw std::invalid_argument("recover: zeta must be finite and > 0");
    Recovered r;
    r.t = project_psd(HermitianMatrix(hermitian_part(t_hat / zeta), 1e-6));
    r.r_x = project_psd(HermitianMatrix(hermitian_part(rx_hat / zeta), 1e-6));
    r.degenerate = zeta <= zeta_min * (1.0 + 1e-6);
    return r;
}

// ---------------------------------------------------------------------------
// Rank-one extraction
// ---------------------------------------------------------------------------

namespace
{

/// Worst-case quantities of a rank-one design that do not depend on t.
struct RankOneContext
{
    double bob_den = 0.0;  // max_Δ fᴴR f + σ_b²
    double eve_den = 0.0;  // min_Δ fᴴR f + σ_e²
};

RankOneContext rank_one_context(const Scenario& s, const CMatrix& r_x)
{
    return {max_quadratic_on_ball(r_x, s.f_bar_b, s.eps_fb).value + s.sigma_b2,
            min_quadratic_on_ball(r_x, s.f_bar_e, s.eps_fe).value + s.sigma_e2};
}

// |(h̄ + Δ)ᴴt|² over ‖Δ‖ ≤ ε ranges over [max(0, |h̄ᴴt| − ε‖t‖)², (|h̄ᴴt| + ε‖t‖)²].
double bob_worst_gain(const Scenario& s, const CVector& t)
{
    return std::pow(std::max(0.0, std::abs(s.h_bar_b.dot(t)) - s.eps_hb * t.norm()), 2);
}

double eve_worst_gain(const Scenario& s, const CVector& t)
{
    return std::pow(std::abs(s.h_bar_e.dot(t)) + s.eps_he * t.norm(), 2);
}

double rank_one_difference(const Scenario& s, const RankOneContext& ctx, const CVector& t)
{
    return std::log2(1.0 + bob_worst_gain(s, t) / ctx.bob_den) - std::log2(1.0 + eve_worst_gain(s, t) / ctx.eve_den);
}

double scale_for(const CVector& t, const Scenario& s, const RankOneContext& ctx, double mu_cap)
{
    const double p = t.squaredNorm();
    if (!(p > 0.0) || !std::isfinite(p))
        return 0.0;
    double c2 = s.p_c / p;
    for (int k = 0; k < s.m_radar; ++k)
    {
        const CVector& g = s.g_bar[static_cast<std::size_t>(k)];
        const double spread = 2.0 * s.eps_gm * g.norm() + s.eps_gm * s.eps_gm;
        const double inr = std::norm(g.conjugate().dot(t)) + spread * p;
        if (inr > 0.0)
            c2 = std::min(c2, s.gamma_inr(k) * s.sigma_r2 / inr);
    }
    if (std::isfinite(mu_cap))
    {
        const double leak = eve_worst_gain(s, t) / ctx.eve_den;
        if (leak > 0.0)
            c2 = std::min(c2, mu_cap / leak);
    }
    return std::sqrt(std::max(0.0, c2));
}

}  // namespace

double feasible_scale(const CVector& t, const Scenario& s, const CMatrix& r_x, double mu_cap)
{
    return scale_for(t, s, rank_one_context(s, r_x), mu_cap);
}

Extraction extract_beamformer(const CMatrix& t, const Scenario& s, const CMatrix& r_x, double mu_cap,
                              const ExtractionOptions& options)
{
    if (options.candidates < 0)
        throw std::invalid_argument("extract_beamformer: candidates must be >= 0");
    const HermitianMatrix th(t, 1e-9);
    const EigenDecomposition eig = hermitian_eigendecompose(th);
    const int n = th.dim();
    const double l1 = std::max(0.0, eig.values(0));
    const double l2 = n > 1 ? std::max(0.0, eig.values(1)) : 0.0;
    if (eig.values(n - 1) < -1e-9 * std::max(1.0, l1))
        throw std::invalid_argument("extract_beamformer: T is not PSD");

    Extraction ex;
    ex.rank_ratio = l1 > 0.0 ? l2 / l1 : 0.0;
    const CVector principal = std::sqrt(l1) * eig.vectors[0];
    const RankOneContext ctx = rank_one_context(s, r_x);

    if (l1 == 0.0 || ex.rank_ratio <= options.rank_threshold)
    {
        ex.t = principal;
        ex.worst_case_difference = worst_case_secrecy_exact(s, ex.t * ex.t.adjoint(), r_x).difference;
        return ex;
    }

    ex.randomized = true;
    CMatrix root(n, n);
    for (int i = 0; i < n; ++i)
        root.col(i) = std::sqrt(std::max(0.0, eig.values(i))) * eig.vectors[static_cast<std::size_t>(i)];

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    double best = kNegInf;
    CVector best_t;
    // The scaled principal direction competes with the random draws.
    for (int k = 0; k <= options.candidates; ++k)
    {
        CVector cand = principal;
        if (k > 0)
        {
            CVector w(n);
            for (int i = 0; i < n; ++i)
                w(i) = cplx(normal(rng), normal(rng));
            cand = root * w;
        }
        const double c = scale_for(cand, s, ctx, mu_cap);
        ++ex.candidates_tried;
        if (!(c > 0.0))
            continue;
        cand *= c;
        const double v = rank_one_difference(s, ctx, cand);
        if (v > best)
        {
            best = v;
            best_t = cand;
        }
    }
    if (best_t.size() == 0)
    {
        ex.fallback = true;
        ex.t = principal;
        ex.warning = "no feasible randomized candidate; returning the dominant eigenvector";
    }
    else
    {
        ex.t = best_t;
    }
    ex.worst_case_difference = worst_case_secrecy_exact(s, ex.t * ex.t.adjoint(), r_x).difference;
    return ex;
}

// ---------------------------------------------------------------------------
// Outer search
// ---------------------------------------------------------------------------

std::string to_string(DesignStatus s)
{
    switch (s)
    {
    case DesignStatus::optimal:
        return "optimal";
    case DesignStatus::infeasible:
        return "infeasible";
    }
    return "unknown";
}

double DesignSolution::secrecy_bound() const
{
    return objective > 0.0 ? std::log2(objective) : kNegInf;
}

namespace
{

class Search
{
public:
    Search(const Scenario& s, const CMatrix& r_d, const DesignOptions& o, double ceiling)
        : s_(s), r_d_(r_d), o_(o), ceiling_(ceiling)
    {
    }

    /// Evaluate the listed μ values, skipping any whose bound cannot beat the
    /// incumbent. Returns the number skipped.
    int sweep(std::vector<double> mus, int level)
    {
        std::sort(mus.begin(), mus.end());
        mus.erase(std::unique(mus.begin(), mus.end()), mus.end());
        std::erase_if(mus, [&](double mu) { return probes_.contains(mu); });
        std::vector<bool> done(mus.size(), false);

        if (!o_.prune)
        {
            for (std::size_t i = 0; i < mus.size(); ++i)
                evaluate(mus[i], level);
            return 0;
        }
        for (;;)
        {
            // open point with the largest bound
            std::size_t pick = mus.size();
            double top = kNegInf;
            for (std::size_t i = 0; i < mus.size(); ++i)
            {
                if (done[i])
                    continue;
                const double ub = bound(mus[i]);
                if (ub * (1.0 + o_.prune_tolerance) <= incumbent_)
                    continue;
                if (ub > top)
                {
                    top = ub;
                    pick = i;
                }
            }
            if (pick == mus.size())
                break;
            // bisect the run of open points that holds it
            std::size_t lo = pick;
            std::size_t hi = pick;
            while (lo > 0 && !done[lo - 1])
                --lo;
            while (hi + 1 < mus.size() && !done[hi + 1])
                ++hi;
            const std::size_t mid = hi == mus.size() - 1 && !has_probe_above(mus[hi]) ? hi : (lo + hi + 1) / 2;
            evaluate(mus[mid], level);
            done[mid] = true;
        }
        return static_cast<int>(std::count(done.begin(), done.end(), false));
    }

    [[nodiscard]] const std::map<double, InnerOutcome>& outcomes() const { return outcomes_; }
    [[nodiscard]] const std::map<double, ProbeRecord>& probes() const { return probes_; }

    [[nodiscard]] double best_mu() const { return best_mu_; }
    [[nodiscard]] double incumbent() const { return incumbent_; }

private:
    bool has_probe_above(double mu) const
    {
        for (auto it = probes_.upper_bound(mu); it != probes_.end(); ++it)
            if (it->second.feasible)
                return true;
        return std::isfinite(ceiling_);
    }

    // (1 + γ_b(μ))/(1 + μ) ≤ (1 + γ_b(μ'))/(1 + μ) for every μ' ≥ μ, and
    // γ_b never exceeds the Eve-free ceiling.
    double bound(double mu) const
    {
        double gamma = ceiling_;
        for (auto it = probes_.upper_bound(mu); it != probes_.end(); ++it)
            if (it->second.feasible)
            {
                gamma = std::min(gamma, it->second.gamma_b);
                break;
            }
        return (1.0 + gamma) / (1.0 + mu);
    }

    void evaluate(double mu, int level)
    {
        InnerOutcome out = inner_solve(s_, r_d_, mu, o_.inner);
        ProbeRecord rec;
        rec.mu = mu;
        rec.level = level;
        rec.feasible = out.feasible;
        rec.gamma_b = out.gamma_b;
        rec.objective = out.feasible ? (1.0 + out.gamma_b) / (1.0 + mu) : kNegInf;
        rec.status = out.status;
        rec.iterations = out.iterations;
        rec.seconds = out.seconds;
        if (rec.objective > incumbent_ || (rec.objective == incumbent_ && mu < best_mu_))
        {
            incumbent_ = rec.objective;
            best_mu_ = mu;
        }
        probes_.emplace(mu, rec);
        outcomes_.emplace(mu, std::move(out));
    }

    const Scenario& s_;
    const CMatrix& r_d_;
    const DesignOptions& o_;
    double ceiling_;
    std::map<double, ProbeRecord> probes_;
    std::map<double, InnerOutcome> outcomes_;
    double incumbent_ = kNegInf;
    double best_mu_ = kInf;
};

}  // namespace

DesignSolution run_design(const Scenario& s, const CMatrix& r_d, const DesignOptions& options)
{
    s.validate();
    if (options.coarse_points < 1 || options.refinement < 0)
        throw std::invalid_argument("run_design: coarse_points must be >= 1 and refinement >= 0");
    if (!(options.prune_tolerance >= 0.0))
        throw std::invalid_argument("run_design: prune_tolerance must be >= 0");

    const auto start = Clock::now();
    DesignSolution d;
    d.mu_bound = sinr_upper_bound(s);
    d.gamma_ceiling = kInf;
    double mu_max = d.mu_bound;
    std::ostringstream diag;

    if (options.cap_with_ceiling)
    {
        InnerOptions free = options.inner;
        free.assembly.omit_eve = true;
        const InnerOutcome ceiling = inner_solve(s, r_d, 0.0, free);
        ++d.inner_solves;
        if (ceiling.feasible)
        {
            // tolerance slack so solver error cannot cut off the top of the range
            d.gamma_ceiling = ceiling.gamma_b * (1.0 + 1e-6) + 1e-12;
            mu_max = std::min(mu_max, d.gamma_ceiling);
        }
        else
        {
            diag << "Eve-free ceiling solve failed (" << to_string(ceiling.status) << "); searching the full range. ";
        }
    }

    d.grid.mu_min = 0.0;
    d.grid.mu_max = mu_max;
    d.grid.coarse_points = mu_max > 0.0 ? options.coarse_points : 1;
    d.grid.refinement = options.refinement;
    d.grid.validate();
    const double delta = d.grid.delta();

    Search search(s, r_d, options, d.gamma_ceiling);
    std::vector<double> coarse;
    for (int i = 0; i < d.grid.coarse_points; ++i)
        coarse.push_back(i + 1 == d.grid.coarse_points && i > 0 ? mu_max : i * delta);
    d.pruned += search.sweep(coarse, 0);

    double step = delta;
    for (int level = 1; level <= d.grid.refinement && delta > 0.0; ++level)
    {
        if (!std::isfinite(search.incumbent()))
            break;
        const double center = search.best_mu();
        step /= 10.0;
        std::vector<double> fine;
        for (int j = -9; j <= 9; ++j)
        {
            const double mu = center + j * step;
            if (j != 0 && mu >= 0.0 && mu <= mu_max)
                fine.push_back(mu);
        }
        d.pruned += search.sweep(fine, level);
    }

    for (const auto& [mu, rec] : search.probes())
        d.per_mu_trace.push_back(rec);
    d.inner_solves += static_cast<int>(d.per_mu_trace.size());

    // γ_b should not drop as μ grows; record every drop
    double last = kNegInf;
    for (const ProbeRecord& r : d.per_mu_trace)
    {
        if (!r.feasible)
            continue;
        if (r.gamma_b < last)
        {
            ++d.monotonicity_flags;
            d.monotonicity_worst = std::max(d.monotonicity_worst, last - r.gamma_b);
        }
        last = std::max(last, r.gamma_b);
    }

    if (!std::isfinite(search.incumbent()))
    {
        d.status = DesignStatus::infeasible;
        diag << "no probe solved: every mu in [0, " << mu_max << "] failed";
        d.diagnostic = diag.str();
        d.seconds = elapsed(start);
        return d;
    }

    const InnerOutcome& best = search.outcomes().at(search.best_mu());
    d.status = DesignStatus::optimal;
    d.mu_star = best.mu;
    d.eta_star = best.gamma_b;
    d.zeta_star = best.zeta;
    d.objective = search.incumbent();

    Recovered rec = recover(best.t_hat, best.rx_hat, best.zeta, options.inner.assembly.zeta_min);
    d.degenerate = rec.degenerate;
    if (rec.t.trace() > s.p_c)
        rec.t *= s.p_c / rec.t.trace();
    if (rec.r_x.trace() > s.p_r)
        rec.r_x *= s.p_r / rec.r_x.trace();
    // INR rows hold only to the solver's absolute tolerance, which is coarse
    // when Γ_m σ_r² is tiny; pull T under the exact worst-case INR
    double inr_scale = 1.0;
    for (int k = 0; k < s.m_radar; ++k)
    {
        const CVector gc = s.g_bar[static_cast<std::size_t>(k)].conjugate();
        const double worst = max_quadratic_on_ball(rec.t.matrix(), gc, s.eps_gm).value;
        const double cap = s.gamma_inr(k) * s.sigma_r2;
        if (worst > cap)
            inr_scale = std::min(inr_scale, cap / worst);
    }
    if (inr_scale < 1.0)
        rec.t *= inr_scale;
    d.T = rec.t;
    d.R_x = rec.r_x;

    const Extraction ex = extract_beamformer(d.T.matrix(), s, d.R_x.matrix(), d.mu_star, options.extraction);
    d.t = ex.t;
    d.rank_ratio = ex.rank_ratio;
    d.randomized = ex.randomized;
    const RankOneContext ctx = rank_one_context(s, d.R_x.matrix());
    d.rank_one_objective = (1.0 + bob_worst_gain(s, d.t) / ctx.bob_den) / (1.0 + d.mu_star);
    d.worst_case_rate = std::max(0.0, ex.worst_case_difference);
    if (!ex.warning.empty())
        diag << ex.warning << ". ";
    if (d.degenerate)
        diag << "zeta at its floor; recovery is degenerate. ";
    if (d.eta_star <= 1e-9 * (1.0 + d.gamma_ceiling))
        diag << "no positive secrecy rate is achievable: Bob's worst-case SINR is zero at every probe. ";
    d.diagnostic = diag.str();
    d.seconds = elapsed(start);
    return d;
}

namespace
{

nlohmann::json complex_vector_json(const CVector& v)
{
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back({v(i).real(), v(i).imag()});
    return a;
}

// JSON has no infinities
nlohmann::json finite_or_null(double x)
{
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const DesignSolution& d)
{
    nlohmann::json j;
    j["status"] = to_string(d.status);
    j["mu_star"] = d.mu_star;
    j["eta_star"] = d.eta_star;
    j["zeta_star"] = d.zeta_star;
    j["objective"] = d.objective;
    j["secrecy_bound"] = finite_or_null(d.secrecy_bound());
    j["rank_ratio"] = d.rank_ratio;
    j["randomized"] = d.randomized;
    j["degenerate"] = d.degenerate;
    j["rank_one_objective"] = d.rank_one_objective;
    j["worst_case_rate"] = d.worst_case_rate;
    j["mu_bound"] = d.mu_bound;
    j["gamma_ceiling"] = finite_or_null(d.gamma_ceiling);
    j["grid"] = {{"mu_min", d.grid.mu_min},
                 {"mu_max", d.grid.mu_max},
                 {"delta", d.grid.delta()},
                 {"coarse_points", d.grid.coarse_points},
                 {"refinement", d.grid.refinement}};
    j["pruned"] = d.pruned;
    j["inner_solves"] = d.inner_solves;
    j["monotonicity_flags"] = d.monotonicity_flags;
    j["monotonicity_worst"] = d.monotonicity_worst;
    j["seconds"] = d.seconds;
    j["diagnostic"] = d.diagnostic;
    j["t"] = complex_vector_json(d.t);
    j["T"] = complex_matrix_json(d.T.matrix());
    j["R_x"] = complex_matrix_json(d.R_x.matrix());
    nlohmann::json trace = nlohmann::json::array();
    for (const ProbeRecord& r : d.per_mu_trace)
        trace.push_back({{"mu", r.mu},
                         {"gamma_b", r.gamma_b},
                         {"objective", finite_or_null(r.objective)},
                         {"feasible", r.feasible},
                         {"level", r.level},
                         {"status", to_string(r.status)},
                         {"iterations", r.iterations},
                         {"seconds", r.seconds}});
    j["per_mu_trace"] = std::move(trace);
    return j;
}

}  // namespace rcc
