// SPDX-License-Identifier: Apache-2.0
#include "rcc/secrecy.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace rcc
{

namespace
{

double quad(const CMatrix& a, const CVector& x) { return x.dot(a * x).real(); }

CVector project_to_ball(const CVector& x, const CVector& center, double radius)
{
    const CVector d = x - center;
    const double n = d.norm();
    if (n <= radius)
        return x;
    return center + (radius / n) * d;
}

BallExtreme make_extreme(const CMatrix& a, const CVector& center, double radius, const CVector& x)
{
    BallExtreme e;
    e.point = project_to_ball(x, center, radius);
    e.value = quad(a, e.point);
    return e;
}

// Largest ν in [lo, hi] with φ(ν) ≥ target for decreasing φ.
template <class Phi>
double bisect_decreasing(Phi phi, double lo, double hi, double target)
{
    for (int it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (phi(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double log2p1(double x) { return std::log2(1.0 + x); }

}  // namespace

double sinr(const CVector& h, const CVector& f, const CMatrix& t, const CMatrix& r_x, double sigma2)
{
    const double num = std::max(0.0, quad(t, h));
    const double den = std::max(0.0, quad(r_x, f)) + sigma2;
    return num / den;
}

SecrecyReport secrecy_rate(const ChannelRealization& real, const CMatrix& t, const CMatrix& r_x, const Scenario& s)
{
    SecrecyReport r;
    r.gamma_b = sinr(real.h_b, real.f_b, t, r_x, s.sigma_b2);
    r.gamma_e = sinr(real.h_e, real.f_e, t, r_x, s.sigma_e2);
    r.rate_b = log2p1(r.gamma_b);
    r.rate_e = log2p1(r.gamma_e);
    r.difference = r.rate_b - r.rate_e;
    r.secrecy_rate = std::max(0.0, r.difference);
    return r;
}

BallExtreme min_quadratic_on_ball(const CMatrix& a, const CVector& center, double radius)
{
    if (radius < 0.0)
        throw std::invalid_argument("min_quadratic_on_ball: negative radius");
    if (radius == 0.0)
        return {quad(a, center), center};
    if (center.norm() <= radius)
        return make_extreme(a, center, radius, CVector::Zero(center.size()));

    const Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
    const RVector lam = es.eigenvalues().cwiseMax(0.0);
    const CVector c = es.eigenvectors().adjoint() * center;
    const double top = lam.maxCoeff();
    const double tiny = 1e-14 * std::max(top, 1e-300);

    // ν → 0⁺ limit: keep the null-space part of the center
    double range_norm2 = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam(i) > tiny)
            range_norm2 += std::norm(c(i));
    if (range_norm2 <= radius * radius)
    {
        CVector y = c;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (lam(i) > tiny)
                y(i) = 0.0;
        return make_extreme(a, center, radius, es.eigenvectors() * y);
    }

    // x_i = ν c_i / (λ_i + ν) with ‖x − c‖ = radius
    const auto phi = [&](double nu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            s += std::norm(lam(i) * c(i) / (lam(i) + nu));
        return s;
    };
    double hi = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        hi += std::norm(lam(i) * c(i));
    hi = 2.0 * std::sqrt(hi) / radius + tiny;
    const double nu = bisect_decreasing(phi, 0.0, hi, radius * radius);
    CVector y(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        y(i) = nu * c(i) / (lam(i) + nu);
    return make_extreme(a, center, radius, es.eigenvectors() * y);
}

BallExtreme max_quadratic_on_ball(const CMatrix& a, const CVector& center, double radius)
{
    if (radius < 0.0)
        throw std::invalid_argument("max_quadratic_on_ball: negative radius");
    if (radius == 0.0)
        return {quad(a, center), center};

    const Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
    const RVector lam = es.eigenvalues().cwiseMax(0.0);
    const Eigen::Index n = lam.size();
    const CVector c = es.eigenvectors().adjoint() * center;
    const double top = lam(n - 1);
    if (top <= 0.0)
        return {quad(a, center), center};
    const double tiny = 1e-12 * top;

    // x_i − c_i = λ_i c_i / (ν − λ_i), ν > λ_max
    const auto phi = [&](double nu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            s += std::norm(lam(i) * c(i) / (nu - lam(i)));
        return s;
    };

    double top_weight = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (lam(i) >= top - tiny)
            top_weight += std::norm(c(i));

    CVector y = c;
    if (top_weight <= 1e-24 * std::max(1.0, c.squaredNorm()))
    {
        // hard case candidate: ν = λ_max, fill the top eigenspace
        double phi0 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (lam(i) < top - tiny)
                phi0 += std::norm(lam(i) * c(i) / (top - lam(i)));
        if (phi0 <= radius * radius)
        {
            for (Eigen::Index i = 0; i < n; ++i)
                if (lam(i) < top - tiny)
                    y(i) = c(i) + lam(i) * c(i) / (top - lam(i));
            y(n - 1) = c(n - 1) + std::sqrt(radius * radius - phi0);
            return make_extreme(a, center, radius, es.eigenvectors() * y);
        }
    }

    double spread = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        spread += std::norm(lam(i) * c(i));
    const double hi = top + 2.0 * std::sqrt(spread) / radius + tiny;
    const double nu = bisect_decreasing(phi, top, hi, radius * radius);
    for (Eigen::Index i = 0; i < n; ++i)
        y(i) = c(i) + lam(i) * c(i) / (nu - lam(i));
    return make_extreme(a, center, radius, es.eigenvectors() * y);
}

namespace
{

BallExtreme search_ball(const CMatrix& a, const CVector& center, double radius, bool maximize,
                        const OracleOptions& o, std::uint64_t stream)
{
    const auto better = [maximize](double v, double best) { return maximize ? v > best : v < best; };
    BallExtreme best{quad(a, center), center};
    if (radius == 0.0)
        return best;
    if (o.exact_candidates)
    {
        const BallExtreme e = maximize ? max_quadratic_on_ball(a, center, radius)
                                       : min_quadratic_on_ball(a, center, radius);
        if (better(e.value, best.value))
            best = e;
    }

    std::mt19937_64 rng(derive_seed(o.seed, stream));
    BallExtreme sampled{quad(a, center), center};
    for (int i = 0; i < o.budget; ++i)
    {
        const CVector x = sample_error_ball(center, radius, i % 2 == 0 ? BallMode::boundary : BallMode::interior, rng);
        const double v = quad(a, x);
        if (better(v, sampled.value))
            sampled = {v, x};
    }

    // projected gradient from the best sample; gradient of xᴴAx is 2Ax
    const double lmax = hermitian_eigenvalues(hermitian_part(a)).maxCoeff();
    if (lmax > 0.0)
    {
        CVector x = sampled.point;
        const double step = maximize ? 1.0 / lmax : -0.5 / lmax;
        for (int k = 0; k < o.refinement_steps; ++k)
        {
            x = project_to_ball(x + step * (a * x), center, radius);
            const double v = quad(a, x);
            if (better(v, sampled.value))
                sampled = {v, x};
        }
    }
    return better(sampled.value, best.value) ? sampled : best;
}

SecrecyReport assemble_report(const Scenario& s, const BallExtreme& hb, const BallExtreme& fb, const BallExtreme& he,
                              const BallExtreme& fe)
{
    SecrecyReport r;
    r.gamma_b = std::max(0.0, hb.value) / (std::max(0.0, fb.value) + s.sigma_b2);
    r.gamma_e = std::max(0.0, he.value) / (std::max(0.0, fe.value) + s.sigma_e2);
    r.rate_b = log2p1(r.gamma_b);
    r.rate_e = log2p1(r.gamma_e);
    r.difference = r.rate_b - r.rate_e;
    r.secrecy_rate = std::max(0.0, r.difference);
    r.worst_case = true;
    r.witness = {hb.point, he.point, fb.point, fe.point, s.g_bar};
    return r;
}

}  // namespace

SecrecyReport worst_case_secrecy(const Scenario& s, const CMatrix& t, const CMatrix& r_x, const OracleOptions& options)
{
    if (options.budget < 1)
        throw std::invalid_argument("worst_case_secrecy: budget must be at least 1");
    const BallExtreme hb = search_ball(t, s.h_bar_b, s.eps_hb, false, options, 0);
    const BallExtreme fb = search_ball(r_x, s.f_bar_b, s.eps_fb, true, options, 1);
    const BallExtreme he = search_ball(t, s.h_bar_e, s.eps_he, true, options, 2);
    const BallExtreme fe = search_ball(r_x, s.f_bar_e, s.eps_fe, false, options, 3);
    return assemble_report(s, hb, fb, he, fe);
}

SecrecyReport worst_case_secrecy_exact(const Scenario& s, const CMatrix& t, const CMatrix& r_x)
{
    return assemble_report(s, min_quadratic_on_ball(t, s.h_bar_b, s.eps_hb),
                           max_quadratic_on_ball(r_x, s.f_bar_b, s.eps_fb),
                           max_quadratic_on_ball(t, s.h_bar_e, s.eps_he),
                           min_quadratic_on_ball(r_x, s.f_bar_e, s.eps_fe));
}

}  // namespace rcc
