// SPDX-License-Identifier: Apache-2.0
#include "rcc/assembly.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>

namespace rcc
{

namespace
{

struct EveShape
{
    bool present = false;
    bool ball_h = false;  // Δ_he block
    bool ball_f = false;  // Δ_fe block
    bool use_basis = false;

    [[nodiscard]] bool scalar_row() const { return present && !ball_h && !ball_f; }
};

EveShape eve_shape(const Scenario& s, double mu, const AssemblyOptions& o)
{
    EveShape e;
    if (o.omit_eve)
        return e;
    if (s.eps_he == 0.0)
    {
        if (s.h_bar_e.isZero(0.0))
            return e;
        if (mu == 0.0)
        {
            e.use_basis = true;
            return e;
        }
    }
    e.present = true;
    e.ball_h = s.eps_he > 0.0;
    e.ball_f = s.eps_fe > 0.0 && mu > 0.0;
    return e;
}

CMatrix corner(int dim, int row)
{
    CMatrix e = CMatrix::Zero(dim, dim);
    e(row, row) = 1.0;
    return e;
}

// Term builders that hide the T̂ basis and the R̂_x = ζ R_d substitution.

void add_t_congruence(LmiConstraint& lmi, const InnerLayout& l, double scale, const CMatrix& lift)
{
    lmi.congruences.push_back({l.t_block, scale, l.t_basis.size() > 0 ? CMatrix(lift * l.t_basis) : lift});
}

void add_rx_congruence(LmiConstraint& lmi, const InnerLayout& l, const CMatrix& r_d, double scale,
                       const CMatrix& lift)
{
    if (l.rx_substituted())
        lmi.scalars.push_back({l.zeta, scale * hermitian_part(lift * r_d * lift.adjoint())});
    else
        lmi.congruences.push_back({l.rx_block, scale, lift});
}

void add_scalar(LmiConstraint& lmi, int slot, const CMatrix& coeff)
{
    if (slot >= 0)
        lmi.scalars.push_back({slot, coeff});
}

// row += scale · Tr(A T̂) and scale · Tr(A R̂_x) in the flat variable vector
void add_t_functional(RVector& row, const ConicProgram& p, const InnerLayout& l, const CMatrix& a, double scale)
{
    const auto& v = p.variables()[static_cast<std::size_t>(l.t_block)];
    const CMatrix reduced = l.t_basis.size() > 0 ? CMatrix(l.t_basis.adjoint() * a * l.t_basis) : a;
    row.segment(v.offset, v.size()) += scale * hermitian_to_params(hermitian_part(reduced));
}

void add_rx_functional(RVector& row, const ConicProgram& p, const InnerLayout& l, const CMatrix& r_d,
                       const CMatrix& a, double scale)
{
    if (l.rx_substituted())
    {
        row(l.zeta) += scale * (a * r_d).trace().real();
        return;
    }
    const auto& v = p.variables()[static_cast<std::size_t>(l.rx_block)];
    row.segment(v.offset, v.size()) += scale * hermitian_to_params(hermitian_part(a));
}

}  // namespace

void AssemblyOptions::validate() const
{
    if (!(zeta_min > 0.0))
        throw std::invalid_argument("AssemblyOptions: zeta_min must be positive");
}

CMatrix orthogonal_complement(const CVector& h)
{
    const Eigen::Index n = h.size();
    if (h.isZero(0.0))
        throw std::invalid_argument("orthogonal_complement: zero vector");
    const Eigen::HouseholderQR<CMatrix> qr(h);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
    return q.rightCols(n - 1);
}

InnerProgram declare_inner_variables(const Scenario& s, double mu, const AssemblyOptions& options)
{
    s.validate();
    options.validate();
    if (!(mu >= 0.0) || !std::isfinite(mu))
        throw std::invalid_argument("assemble_inner: mu must be finite and nonnegative");

    InnerProgram ip;
    ip.mu = mu;
    auto& p = ip.program;
    auto& l = ip.layout;
    const EveShape eve = eve_shape(s, mu, options);

    if (eve.use_basis)
    {
        l.t_basis = orthogonal_complement(s.h_bar_e);
        l.t_block = p.add_hermitian("S", static_cast<int>(l.t_basis.cols()));
    }
    else
        l.t_block = p.add_hermitian("T", s.n_bs);
    if (s.gamma_p > 0.0)
        l.rx_block = p.add_hermitian("Rx", s.m_radar);
    l.zeta = p.add_scalar("zeta");
    l.eta = p.add_scalar("eta");
    if (s.eps_hb > 0.0)
        l.lambda1 = p.add_scalar("lambda1");
    if (s.eps_fb > 0.0)
        l.lambda2 = p.add_scalar("lambda2");
    if (eve.ball_h)
        l.lambda3 = p.add_scalar("lambda3");
    if (eve.ball_f)
        l.xi = p.add_scalar("xi");
    p.finalize_layout();
    p.maximize = true;
    p.objective(l.eta) = 1.0;
    return ip;
}

void add_bob_rate(InnerProgram& ip, const Scenario& s)
{
    auto& p = ip.program;
    const auto& l = ip.layout;
    const int n = s.n_bs;
    if (s.eps_hb == 0.0)
    {
        RVector row = RVector::Zero(p.num_vars());
        add_t_functional(row, p, l, s.h_bar_b * s.h_bar_b.adjoint(), 1.0);
        row(l.eta) = -1.0;
        p.add_linear_row("bob-rate", row, 0.0);
        return;
    }
    // L T̂ Lᴴ + λ₁ diag(I, −ε²) − η e eᴴ with L = [I; h̄ᴴ]
    LmiConstraint lmi;
    lmi.name = "bob-rate";
    lmi.dim = n + 1;
    lmi.constant = CMatrix::Zero(n + 1, n + 1);
    CMatrix lift(n + 1, n);
    lift << CMatrix::Identity(n, n), s.h_bar_b.adjoint();
    add_t_congruence(lmi, l, 1.0, lift);
    CMatrix mult = CMatrix::Identity(n + 1, n + 1);
    mult(n, n) = -s.eps_hb * s.eps_hb;
    add_scalar(lmi, l.lambda1, mult);
    add_scalar(lmi, l.eta, -corner(n + 1, n));
    p.lmis.push_back(std::move(lmi));
}

void add_bs_interference(InnerProgram& ip, const Scenario& s, const CMatrix& r_d)
{
    auto& p = ip.program;
    const auto& l = ip.layout;
    const int m = s.m_radar;
    if (s.eps_fb == 0.0)
    {
        RVector row = RVector::Zero(p.num_vars());
        add_rx_functional(row, p, l, r_d, s.f_bar_b * s.f_bar_b.adjoint(), -1.0);
        row(l.zeta) -= s.sigma_b2;
        p.add_linear_row("bs-interference", row, 1.0);
        return;
    }
    // −L R̂ Lᴴ + λ₂ diag(I, −ε²) − ζσ_b² e eᴴ + e eᴴ with L = [I; f̄ᴴ]
    LmiConstraint lmi;
    lmi.name = "bs-interference";
    lmi.dim = m + 1;
    lmi.constant = corner(m + 1, m);
    CMatrix lift(m + 1, m);
    lift << CMatrix::Identity(m, m), s.f_bar_b.adjoint();
    add_rx_congruence(lmi, l, r_d, -1.0, lift);
    CMatrix mult = CMatrix::Identity(m + 1, m + 1);
    mult(m, m) = -s.eps_fb * s.eps_fb;
    add_scalar(lmi, l.lambda2, mult);
    add_scalar(lmi, l.zeta, -s.sigma_b2 * corner(m + 1, m));
    p.lmis.push_back(std::move(lmi));
}

void add_eve_leakage(InnerProgram& ip, const Scenario& s, const CMatrix& r_d)
{
    const EveShape eve = eve_shape(s, ip.mu, AssemblyOptions{.omit_eve = false});
    if (!eve.present)
        return;
    auto& p = ip.program;
    const auto& l = ip.layout;
    const double mu = ip.mu;
    const int n = s.n_bs;
    const int m = s.m_radar;

    if (eve.scalar_row())
    {
        RVector row = RVector::Zero(p.num_vars());
        add_t_functional(row, p, l, s.h_bar_e * s.h_bar_e.adjoint(), -1.0);
        add_rx_functional(row, p, l, r_d, s.f_bar_e * s.f_bar_e.adjoint(), mu);
        row(l.zeta) += mu * s.sigma_e2;
        p.add_linear_row("eve-leakage", row, 0.0);
        return;
    }

    // Blocks (Δ_he, 1, Δ_fe); the first and last are present only for a
    // nonzero ball. With ξ̃ = ξ/ε_fe²:
    //   −L₁ T̂ L₁ᴴ + μ L₂ R̂ L₂ᴴ + λ₃ diag(I, −ε_he², 0) + μζσ_e² e eᴴ + ξ̃ diag(0, −ε_fe², I)
    // with L₁ = [I; h̄_eᴴ; 0] and L₂ = [0; f̄_eᴴ; I].
    const int nh = eve.ball_h ? n : 0;
    const int nf = eve.ball_f ? m : 0;
    const int dim = nh + 1 + nf;
    const int mid = nh;

    LmiConstraint lmi;
    lmi.name = "eve-leakage";
    lmi.dim = dim;
    lmi.constant = CMatrix::Zero(dim, dim);

    CMatrix l1 = CMatrix::Zero(dim, n);
    if (eve.ball_h)
        l1.topRows(n) = CMatrix::Identity(n, n);
    l1.row(mid) = s.h_bar_e.adjoint();
    add_t_congruence(lmi, l, -1.0, l1);

    if (mu > 0.0)
    {
        CMatrix l2 = CMatrix::Zero(dim, m);
        l2.row(mid) = s.f_bar_e.adjoint();
        if (eve.ball_f)
            l2.bottomRows(m) = CMatrix::Identity(m, m);
        add_rx_congruence(lmi, l, r_d, mu, l2);
        add_scalar(lmi, l.zeta, mu * s.sigma_e2 * corner(dim, mid));
    }
    if (eve.ball_h)
    {
        CMatrix mult = CMatrix::Zero(dim, dim);
        mult.topLeftCorner(n, n).setIdentity();
        mult(mid, mid) = -s.eps_he * s.eps_he;
        add_scalar(lmi, l.lambda3, mult);
    }
    if (eve.ball_f)
    {
        CMatrix mult = CMatrix::Zero(dim, dim);
        mult.bottomRightCorner(m, m).setIdentity();
        mult(mid, mid) = -s.eps_fe * s.eps_fe;
        add_scalar(lmi, l.xi, mult);
    }
    p.lmis.push_back(std::move(lmi));
}

void add_robust_inr(InnerProgram& ip, const Scenario& s)
{
    auto& p = ip.program;
    const auto& l = ip.layout;
    const CMatrix id = CMatrix::Identity(s.n_bs, s.n_bs);
    for (int k = 0; k < s.m_radar; ++k)
    {
        const CVector& g = s.g_bar[static_cast<std::size_t>(k)];
        const CVector gc = g.conjugate();
        const double spread = 2.0 * s.eps_gm * g.norm() + s.eps_gm * s.eps_gm;
        RVector row = RVector::Zero(p.num_vars());
        add_t_functional(row, p, l, gc * gc.adjoint(), -1.0);
        add_t_functional(row, p, l, id, -spread);
        row(l.zeta) = s.gamma_inr(k) * s.sigma_r2;
        p.add_linear_row("inr-" + std::to_string(k), row, 0.0);
    }
}

void add_mismatch(InnerProgram& ip, const Scenario& s, const CMatrix& r_d)
{
    const auto& l = ip.layout;
    if (l.rx_substituted())
        return;
    auto& p = ip.program;
    const int m2 = s.m_radar * s.m_radar;
    const auto& v = p.variables()[static_cast<std::size_t>(l.rx_block)];
    SocConstraint soc;
    soc.name = "mismatch";
    soc.coeff = RMatrix::Zero(m2 + 1, p.num_vars());
    soc.constant = RVector::Zero(m2 + 1);
    soc.coeff(0, l.zeta) = std::sqrt(s.gamma_p);
    soc.coeff.block(1, v.offset, m2, m2).setIdentity();
    soc.coeff.block(1, l.zeta, m2, 1) = -hermitian_to_params(r_d);
    p.socs.push_back(std::move(soc));
}

InnerProgram assemble_inner(const Scenario& s, const CMatrix& r_d, double mu, const AssemblyOptions& options)
{
    if (r_d.rows() != s.m_radar || r_d.cols() != s.m_radar)
        throw std::invalid_argument("assemble_inner: R_d must be M×M");
    if (hermitian_defect(r_d) > 1e-10)
        throw std::invalid_argument("assemble_inner: R_d must be Hermitian");

    InnerProgram ip = declare_inner_variables(s, mu, options);
    auto& p = ip.program;
    const auto& l = ip.layout;

    add_bob_rate(ip, s);
    add_bs_interference(ip, s, r_d);
    if (!options.omit_eve)
        add_eve_leakage(ip, s, r_d);
    add_robust_inr(ip, s);
    add_mismatch(ip, s, r_d);

    const auto& tv = p.variables()[static_cast<std::size_t>(l.t_block)];
    LmiConstraint t_psd;
    t_psd.name = "T-psd";
    t_psd.dim = tv.dim;
    t_psd.constant = CMatrix::Zero(tv.dim, tv.dim);
    t_psd.congruences.push_back({l.t_block, 1.0, CMatrix::Identity(tv.dim, tv.dim)});
    p.lmis.push_back(std::move(t_psd));

    const int m = s.m_radar;
    if (!l.rx_substituted())
    {
        LmiConstraint r_psd;
        r_psd.name = "Rx-psd";
        r_psd.dim = m;
        r_psd.constant = CMatrix::Zero(m, m);
        r_psd.congruences.push_back({l.rx_block, 1.0, CMatrix::Identity(m, m)});
        p.lmis.push_back(std::move(r_psd));

        RVector row = RVector::Zero(p.num_vars());
        add_rx_functional(row, p, l, r_d, CMatrix::Identity(m, m), -1.0);
        row(l.zeta) = s.p_r;
        p.add_linear_row("radar-power", row, 0.0);
    }

    RVector row = RVector::Zero(p.num_vars());
    add_t_functional(row, p, l, CMatrix::Identity(s.n_bs, s.n_bs), -1.0);
    row(l.zeta) = s.p_c;
    p.add_linear_row("bs-power", row, 0.0);

    row.setZero();
    row(l.zeta) = 1.0;
    p.add_linear_row("zeta-min", row, -options.zeta_min);

    for (const auto& [slot, name] : {std::pair{l.lambda1, "lambda1"}, std::pair{l.lambda2, "lambda2"},
                                     std::pair{l.lambda3, "lambda3"}, std::pair{l.xi, "xi"}})
    {
        if (slot < 0)
            continue;
        row.setZero();
        row(slot) = 1.0;
        p.add_linear_row(std::string(name) + ">=0", row, 0.0);
    }
    return ip;
}

ConicProgram::Dimensions inner_dimensions(const Scenario& s, double mu, const AssemblyOptions& options)
{
    const EveShape eve = eve_shape(s, mu, options);
    const int n = s.n_bs;
    const int m = s.m_radar;
    const bool rx = s.gamma_p > 0.0;
    const int nt = eve.use_basis ? n - 1 : n;
    const int multipliers = (s.eps_hb > 0.0) + (s.eps_fb > 0.0) + eve.ball_h + eve.ball_f;

    ConicProgram::Dimensions d;
    d.variables = nt * nt + (rx ? m * m : 0) + 2 + multipliers;

    const auto lmi = [&d](int side) {
        ++d.lmi_blocks;
        d.lmi_total_side += side;
    };
    if (s.eps_hb > 0.0)
        lmi(n + 1);
    else
        ++d.linear_rows;
    if (s.eps_fb > 0.0)
        lmi(m + 1);
    else
        ++d.linear_rows;
    if (eve.scalar_row())
        ++d.linear_rows;
    else if (eve.present)
        lmi((eve.ball_h ? n : 0) + 1 + (eve.ball_f ? m : 0));
    lmi(nt);
    if (rx)
    {
        lmi(m);
        d.soc_blocks = 1;
        d.soc_total_length = m * m + 1;
        ++d.linear_rows;  // radar power
    }
    d.linear_rows += m + 2 + multipliers;  // INR, BS power, ζ floor, multipliers
    return d;
}

CMatrix t_hat_value(const InnerProgram& ip, const RVector& x)
{
    const auto& v = ip.program.variables()[static_cast<std::size_t>(ip.layout.t_block)];
    const CMatrix inner = params_to_hermitian(x.segment(v.offset, v.size()), v.dim);
    if (ip.layout.t_basis.size() == 0)
        return inner;
    return hermitian_part(ip.layout.t_basis * inner * ip.layout.t_basis.adjoint());
}

CMatrix rx_hat_value(const InnerProgram& ip, const CMatrix& r_d, const RVector& x)
{
    if (ip.layout.rx_substituted())
        return x(ip.layout.zeta) * r_d;
    const auto& v = ip.program.variables()[static_cast<std::size_t>(ip.layout.rx_block)];
    return params_to_hermitian(x.segment(v.offset, v.size()), v.dim);
}

}  // namespace rcc
