// SPDX-License-Identifier: Apache-2.0
#include "rcc/radar.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace rcc
{

void BeampatternSpec::validate() const
{
    if (grid.empty())
        throw std::invalid_argument("beampattern spec: empty grid");
    if (static_cast<Eigen::Index>(grid.size()) != desired_gain.size())
        throw std::invalid_argument("beampattern spec: desired_gain length differs from grid length");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1]))
            throw std::invalid_argument("beampattern spec: grid must be strictly increasing");
    if ((desired_gain.array() < 0.0).any() || !desired_gain.allFinite())
        throw std::invalid_argument("beampattern spec: desired gains must be finite and nonnegative");
    if (!(mainlobe_lo < mainlobe_hi))
        throw std::invalid_argument("beampattern spec: empty mainlobe");
}

bool in_mainlobe(double theta_deg, double lo, double hi)
{
    const auto wrap = [](double x) { return x - 360.0 * std::floor(x / 360.0); };
    const auto inside = [&](double x) {
        const double w = wrap(x - lo);
        return w <= wrap(hi - lo) + 1e-9 || w >= 360.0 - 1e-9;
    };
    if (inside(theta_deg))
        return true;
    // a lobe through endfire continues past u = ±1 into its alias at θ + 180°
    return (inside(90.0) || inside(270.0)) && inside(theta_deg + 180.0);
}

BeampatternSpec mainlobe_mask(double lo, double hi, double step_deg)
{
    if (!(step_deg > 0.0))
        throw std::invalid_argument("mainlobe_mask: step must be positive");
    BeampatternSpec spec;
    spec.mainlobe_lo = lo;
    spec.mainlobe_hi = hi;
    const int count = static_cast<int>(std::ceil(360.0 / step_deg - 1e-9));
    spec.desired_gain.resize(count);
    for (int k = 0; k < count; ++k)
    {
        const double theta = k * step_deg;
        spec.grid.push_back(theta);
        spec.desired_gain(k) = in_mainlobe(theta, lo, hi) ? 1.0 : 0.0;
    }
    return spec;
}

double beampattern(const CMatrix& r, double theta_deg)
{
    const CVector a = steering_vector(theta_deg, static_cast<int>(r.rows()));
    return std::max(0.0, a.dot(r * a).real());
}

RVector beampattern(const CMatrix& r, const std::vector<double>& grid)
{
    RVector out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k)
        out(static_cast<Eigen::Index>(k)) = beampattern(r, grid[k]);
    return out;
}

LobeAverages lobe_averages(const CMatrix& r, const BeampatternSpec& spec)
{
    LobeAverages out;
    int in = 0;
    int off = 0;
    for (const double theta : spec.grid)
    {
        const double g = beampattern(r, theta);
        if (in_mainlobe(theta, spec.mainlobe_lo, spec.mainlobe_hi))
        {
            out.mainlobe += g;
            ++in;
        }
        else
        {
            out.sidelobe += g;
            ++off;
        }
    }
    if (in > 0)
        out.mainlobe /= in;
    if (off > 0)
        out.sidelobe /= off;
    return out;
}

CovarianceDesign design_ideal_covariance(const BeampatternSpec& spec, double p_r, int m, const SolverConfig& config)
{
    spec.validate();
    if (!(p_r > 0.0))
        throw std::invalid_argument("design_ideal_covariance: p_r must be positive");
    if (m < 1)
        throw std::invalid_argument("design_ideal_covariance: m must be positive");

    const auto k = static_cast<int>(spec.grid.size());
    ConicProgram p;
    const int rb = p.add_hermitian("R", m);
    const int eta = p.add_scalar("eta");
    const int t = p.add_scalar("t");
    p.finalize_layout();
    p.objective(t) = 1.0;
    const int off = p.variables()[static_cast<std::size_t>(rb)].offset;

    // u = (t, η d_k − a_kᴴ R a_k) in the second-order cone
    SocConstraint fit;
    fit.name = "beampattern-fit";
    fit.coeff = RMatrix::Zero(k + 1, p.num_vars());
    fit.constant = RVector::Zero(k + 1);
    fit.coeff(0, t) = 1.0;
    for (int i = 0; i < k; ++i)
    {
        const CVector a = steering_vector(spec.grid[static_cast<std::size_t>(i)], m);
        fit.coeff.block(i + 1, off, 1, m * m) = -hermitian_to_params(a * a.adjoint()).transpose();
        fit.coeff(i + 1, eta) = spec.desired_gain(i);
    }
    p.socs.push_back(fit);

    LmiConstraint psd;
    psd.name = "R-psd";
    psd.dim = m;
    psd.constant = CMatrix::Zero(m, m);
    psd.congruences.push_back({rb, 1.0, CMatrix::Identity(m, m)});
    p.lmis.push_back(psd);

    RVector row = RVector::Zero(p.num_vars());
    row(eta) = 1.0;
    p.add_linear_row("eta>=0", row, 0.0);

    RVector tr = RVector::Zero(p.num_vars());
    tr.segment(off, m * m) = hermitian_to_params(CMatrix::Identity(m, m));
    p.add_equality_row("trace", tr, p_r);

    const SolverSolution sol = solve(p, config);
    if (!sol.optimal())
        throw std::runtime_error("design_ideal_covariance: solver returned " + to_string(sol.status) + ": " +
                                 sol.diagnostic);

    // clean round-off: clip tiny negative eigenvalues and restore the trace
    HermitianMatrix r = project_psd(HermitianMatrix(p.matrix_value("R", sol.x), 1e-8));
    r *= p_r / r.trace();

    CovarianceDesign out;
    out.scale = std::max(0.0, sol.x(eta));
    out.iterations = sol.iterations;
    const RVector gains = beampattern(r.matrix(), spec.grid);
    out.residual = (out.scale * spec.desired_gain - gains).norm();
    out.r_d = std::move(r);
    return out;
}

double inr_per_antenna(const CVector& g, const CMatrix& t, double sigma_r2)
{
    if (!(sigma_r2 > 0.0))
        throw std::invalid_argument("inr_per_antenna: sigma_r2 must be positive");
    const CVector gc = g.conjugate();
    return std::max(0.0, gc.dot(t * gc).real()) / sigma_r2;
}

double noncentrality(const CMatrix& r_x, const CMatrix& t, const CMatrix& g, const CVector& a_t, const CVector& a_r,
                     double alpha_mag2, double pulse_len, double sigma_r2)
{
    if (!(sigma_r2 > 0.0))
        throw std::invalid_argument("noncentrality: sigma_r2 must be positive");
    if (alpha_mag2 == 0.0)
        return 0.0;
    const Eigen::Index m = a_r.size();
    const CMatrix q = hermitian_part(g.transpose() * t * g.conjugate()) + sigma_r2 * CMatrix::Identity(m, m);
    const Eigen::LLT<CMatrix> llt(q);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("noncentrality: interference-plus-noise covariance is not positive definite");
    // Tr(a_r a_tᴴ R a_t a_rᴴ Q⁻¹) = (a_tᴴ R a_t)(a_rᴴ Q⁻¹ a_r)
    const double tx = std::max(0.0, a_t.dot(r_x * a_t).real());
    const double rx = std::max(0.0, a_r.dot(llt.solve(a_r)).real());
    return alpha_mag2 * pulse_len * tx * rx;
}

DetectionOutcome detection_probability(double rho, double p_fa)
{
    if (!(rho >= 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("detection_probability: rho must be finite and nonnegative");
    if (!(p_fa > 0.0 && p_fa < 1.0))
        throw std::invalid_argument("detection_probability: p_fa must lie in (0, 1)");

    DetectionOutcome out;
    out.rho = rho;
    out.p_fa = p_fa;
    out.threshold = -2.0 * std::log(p_fa);

    if (rho > 1e5)
    {
        // normal approximation: mean 2 + ρ, variance 4(1 + ρ)
        const double z = (out.threshold - 2.0 - rho) / (2.0 * std::sqrt(1.0 + rho));
        out.p_d = 0.5 * std::erfc(z / std::sqrt(2.0));
        return out;
    }

    // P_D = Σ_k Pois(k; λ) · P(Pois(x) ≤ k), λ = ρ/2, x = τ/2.
    // Each term is ≤ Pois(k; λ), so the remainder after k is bounded by the
    // Poisson tail; once P(Pois(x) ≤ k) ≈ 1 the remainder is the tail itself.
    const double lam = 0.5 * rho;
    const double x = 0.5 * out.threshold;
    const double log_lam = lam > 0.0 ? std::log(lam) : 0.0;
    const double log_x = std::log(x);
    double sum = 0.0;
    double weight_mass = 0.0;  // Σ_{j≤k} Pois(j; λ)
    double cdf = 0.0;          // P(Pois(x) ≤ k)
    const int limit = static_cast<int>(lam + 60.0 * std::sqrt(lam + 1.0) + 400.0);
    for (int k = 0; k <= limit; ++k)
    {
        const double lg = std::lgamma(k + 1.0);
        const double w = lam > 0.0 ? std::exp(-lam + k * log_lam - lg) : (k == 0 ? 1.0 : 0.0);
        cdf += std::exp(-x + k * log_x - lg);
        sum += w * std::min(cdf, 1.0);
        weight_mass += w;
        if (cdf >= 1.0 - 1e-16)
        {
            sum += std::max(0.0, 1.0 - weight_mass);
            break;
        }
        if (k + 2 > lam)
        {
            const double next = lam > 0.0 ? w * lam / (k + 1.0) : 0.0;
            const double tail_bound = next / (1.0 - lam / (k + 2.0));
            if (tail_bound < 1e-17)
                break;
        }
    }
    out.p_d = std::clamp(sum, 0.0, 1.0);
    return out;
}

double mainlobe_detection_probability(const Scenario& s, const CMatrix& t, const CMatrix& r_x)
{
    const CMatrix g = s.g_matrix();
    double acc = 0.0;
    int count = 0;
    for (double theta = s.mainlobe_lo; theta <= s.mainlobe_hi + 1e-9; theta += 1.0)
    {
        const CVector a = steering_vector(theta, s.m_radar);
        const double rho = noncentrality(r_x, t, g, a, a, s.alpha_mag2, s.pulse_len, s.sigma_r2);
        acc += detection_probability(rho, s.p_fa).p_d;
        ++count;
    }
    return acc / count;
}

}  // namespace rcc
