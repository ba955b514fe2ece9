// SPDX-License-Identifier: Apache-2.0
//
// Homogeneous self-dual path-following method for
//
//   minimize cᵀx  s.t.  s = h + Mx ⪰ 0,  Ax = b
//
// with the cone a product of a nonnegative orthant, second-order cones and
// complex Hermitian PSD blocks (inner product Re Tr(XY)). Nesterov-Todd
// scaling throughout; Mehrotra corrector on by default.
#include "rcc/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rcc
{

std::string to_string(SolverStatus s)
{
    switch (s)
    {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::infeasible: return "infeasible";
    case SolverStatus::unbounded: return "unbounded";
    case SolverStatus::numerical_failure: return "numerical-failure";
    case SolverStatus::iteration_limit: return "iteration-limit";
    }
    return "unknown";
}

void SolverConfig::validate() const
{
    if (!(gap_tol > 0.0) || !(feas_tol > 0.0))
        throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (!(step_fraction > 0.0 && step_fraction < 1.0))
        throw std::invalid_argument("SolverConfig: step_fraction must lie in (0, 1)");
    if (max_iters < 1)
        throw std::invalid_argument("SolverConfig: max_iters must be at least 1");
    if (!(regularization >= 0.0))
        throw std::invalid_argument("SolverConfig: regularization must be nonnegative");
    if (!(reduced_accuracy_factor >= 1.0))
        throw std::invalid_argument("SolverConfig: reduced_accuracy_factor must be >= 1");
}

namespace
{

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Congruence
{
    int offset = 0;
    int n = 0;
    double scale = 1.0;
    CMatrix lift;
};

struct Lmi
{
    int dim = 0;
    CMatrix h;
    std::vector<ScalarTerm> scalars;
    std::vector<Congruence> congruences;
};

struct Soc
{
    RMatrix C;
    RVector h;
    RMatrix CtC;
};

struct Problem
{
    int n = 0;
    RVector c;  // minimization form
    RMatrix A;
    RVector b;
    RMatrix Clin;
    RVector hlin;
    std::vector<std::vector<int>> lin_nz;
    std::vector<Soc> soc;
    std::vector<Lmi> lmi;
    int degree = 0;

    [[nodiscard]] int p() const { return static_cast<int>(A.rows()); }
};

Problem compile(const ConicProgram& prog)
{
    Problem P;
    P.n = prog.num_vars();
    P.c = prog.maximize ? RVector(-prog.objective) : prog.objective;
    if (prog.equalities.rows() > 0)
    {
        P.A = prog.equalities.coeff;
        P.b = prog.equalities.rhs;
    }
    else
    {
        P.A = RMatrix::Zero(0, P.n);
        P.b = RVector::Zero(0);
    }
    if (prog.linear.rows() > 0)
    {
        P.Clin = prog.linear.coeff;
        P.hlin = prog.linear.constant;
    }
    else
    {
        P.Clin = RMatrix::Zero(0, P.n);
        P.hlin = RVector::Zero(0);
    }
    P.lin_nz.resize(static_cast<std::size_t>(P.Clin.rows()));
    for (Eigen::Index r = 0; r < P.Clin.rows(); ++r)
        for (Eigen::Index j = 0; j < P.n; ++j)
            if (P.Clin(r, j) != 0.0)
                P.lin_nz[static_cast<std::size_t>(r)].push_back(static_cast<int>(j));
    for (const auto& s : prog.socs)
        P.soc.push_back({s.coeff, s.constant, s.coeff.transpose() * s.coeff});
    for (const auto& l : prog.lmis)
    {
        Lmi L;
        L.dim = l.dim;
        L.h = hermitian_part(l.constant);
        L.scalars = l.scalars;
        for (auto& t : L.scalars)
            t.coeff = hermitian_part(t.coeff);
        for (const auto& t : l.congruences)
        {
            const auto& v = prog.variables()[static_cast<std::size_t>(t.block)];
            L.congruences.push_back({v.offset, v.dim, t.scale, t.lift});
        }
        P.lmi.push_back(std::move(L));
    }
    P.degree = static_cast<int>(P.Clin.rows()) + static_cast<int>(P.soc.size());
    for (const auto& l : P.lmi)
        P.degree += l.dim;
    return P;
}

// ---------------------------------------------------------------------------
// Cone vectors
// ---------------------------------------------------------------------------

struct ConeVec
{
    RVector lin;
    std::vector<RVector> soc;
    std::vector<CMatrix> psd;
};

double herm_inner(const CMatrix& a, const CMatrix& b)
{
    return (a.conjugate().cwiseProduct(b)).sum().real();
}

double dot(const ConeVec& a, const ConeVec& b)
{
    double d = a.lin.dot(b.lin);
    for (std::size_t k = 0; k < a.soc.size(); ++k)
        d += a.soc[k].dot(b.soc[k]);
    for (std::size_t k = 0; k < a.psd.size(); ++k)
        d += herm_inner(a.psd[k], b.psd[k]);
    return d;
}

double norm(const ConeVec& a)
{
    return std::sqrt(std::max(dot(a, a), 0.0));
}

void axpy(double alpha, const ConeVec& x, ConeVec& y)
{
    y.lin += alpha * x.lin;
    for (std::size_t k = 0; k < x.soc.size(); ++k)
        y.soc[k] += alpha * x.soc[k];
    for (std::size_t k = 0; k < x.psd.size(); ++k)
        y.psd[k] += alpha * x.psd[k];
}

ConeVec scaled(double alpha, ConeVec x)
{
    x.lin *= alpha;
    for (auto& v : x.soc)
        v *= alpha;
    for (auto& m : x.psd)
        m *= alpha;
    return x;
}

ConeVec identity_element(const Problem& P)
{
    ConeVec e;
    e.lin = RVector::Ones(P.Clin.rows());
    for (const auto& s : P.soc)
    {
        RVector v = RVector::Zero(s.h.size());
        v(0) = 1.0;
        e.soc.push_back(v);
    }
    for (const auto& l : P.lmi)
        e.psd.push_back(CMatrix::Identity(l.dim, l.dim));
    return e;
}

ConeVec constant_part(const Problem& P)
{
    ConeVec h;
    h.lin = P.hlin;
    for (const auto& s : P.soc)
        h.soc.push_back(s.h);
    for (const auto& l : P.lmi)
        h.psd.push_back(l.h);
    return h;
}

bool all_finite(const ConeVec& v)
{
    if (!v.lin.allFinite())
        return false;
    for (const auto& s : v.soc)
        if (!s.allFinite())
            return false;
    for (const auto& m : v.psd)
        if (!m.allFinite())
            return false;
    return true;
}

// M x
ConeVec apply_M(const Problem& P, const RVector& x)
{
    ConeVec out;
    out.lin = P.Clin * x;
    for (const auto& s : P.soc)
        out.soc.push_back(s.C * x);
    for (const auto& l : P.lmi)
    {
        CMatrix m = CMatrix::Zero(l.dim, l.dim);
        for (const auto& t : l.scalars)
            m += x(t.var) * t.coeff;
        for (const auto& t : l.congruences)
        {
            const CMatrix X = params_to_hermitian(x.segment(t.offset, t.n * t.n), t.n);
            m += t.scale * (t.lift * X * t.lift.adjoint());
        }
        out.psd.push_back(hermitian_part(m));
    }
    return out;
}

// Mᵀ z
RVector apply_Mt(const Problem& P, const ConeVec& z)
{
    RVector g = P.Clin.transpose() * z.lin;
    for (std::size_t k = 0; k < P.soc.size(); ++k)
        g += P.soc[k].C.transpose() * z.soc[k];
    for (std::size_t k = 0; k < P.lmi.size(); ++k)
    {
        const auto& l = P.lmi[k];
        const CMatrix& Z = z.psd[k];
        for (const auto& t : l.scalars)
            g(t.var) += herm_inner(t.coeff, Z);
        for (const auto& t : l.congruences)
            g.segment(t.offset, t.n * t.n) += t.scale * hermitian_to_params(t.lift.adjoint() * Z * t.lift);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling
// ---------------------------------------------------------------------------

struct SocScaling
{
    double beta = 1.0;
    RVector wbar;
};

struct PsdScaling
{
    CMatrix R;
    CMatrix Rinv;
    CMatrix V;  // (R Rᴴ)⁻¹
};

struct Scaling
{
    RVector d;  // orthant: sqrt(s/z)
    std::vector<SocScaling> soc;
    std::vector<PsdScaling> psd;
    ConeVec lambda;
};

Scaling identity_scaling(const Problem& P)
{
    Scaling W;
    W.d = RVector::Ones(P.Clin.rows());
    for (const auto& s : P.soc)
    {
        RVector e = RVector::Zero(s.h.size());
        e(0) = 1.0;
        W.soc.push_back({1.0, e});
    }
    for (const auto& l : P.lmi)
    {
        const CMatrix I = CMatrix::Identity(l.dim, l.dim);
        W.psd.push_back({I, I, I});
    }
    return W;
}

double soc_det(const RVector& u)
{
    const double t = u.tail(u.size() - 1).norm();
    return (u(0) - t) * (u(0) + t);
}

RVector soc_J(RVector u)
{
    u.tail(u.size() - 1) *= -1.0;
    return u;
}

// W u = β(2 w̄ w̄ᵀ − J) u
RVector soc_W(const SocScaling& w, const RVector& u)
{
    return w.beta * (2.0 * w.wbar.dot(u) * w.wbar - soc_J(u));
}

// W⁻¹ u = (1/β)(2 J w̄ w̄ᵀ J − J) u
RVector soc_Winv(const SocScaling& w, const RVector& u)
{
    const RVector Jw = soc_J(w.wbar);
    return (2.0 * Jw.dot(u) * Jw - soc_J(u)) / w.beta;
}

bool chol_factor(const CMatrix& a, CMatrix& L)
{
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success)
        return false;
    L = llt.matrixL();
    return L.diagonal().real().minCoeff() > 0.0;
}

// Square root factor of a nearly-singular PD matrix.
CMatrix sqrt_factor(const CMatrix& a)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
    const double floor = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300) * 1e-300;
    const RVector r = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
    return es.eigenvectors() * r.cast<cplx>().asDiagonal();
}

Scaling compute_scaling(const Problem& P, const ConeVec& s, const ConeVec& z)
{
    Scaling W;
    W.d = (s.lin.array() / z.lin.array()).sqrt();
    W.lambda.lin = (s.lin.array() * z.lin.array()).sqrt();
    for (std::size_t k = 0; k < P.soc.size(); ++k)
    {
        const RVector& sk = s.soc[k];
        const RVector& zk = z.soc[k];
        const double sdet = soc_det(sk);
        const double zdet = soc_det(zk);
        const RVector sb = sk / std::sqrt(sdet);
        const RVector zb = zk / std::sqrt(zdet);
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        SocScaling sc;
        // W = β(2vvᵀ − J) with v the square root of w̄ = (s̄ + J z̄)/(2γ)
        RVector wbar = (sb + soc_J(zb)) / (2.0 * gamma);
        wbar(0) += 1.0;
        sc.wbar = wbar / std::sqrt(2.0 * wbar(0));
        sc.beta = std::pow(sdet / zdet, 0.25);
        W.lambda.soc.push_back(soc_W(sc, zk));
        W.soc.push_back(std::move(sc));
    }
    for (std::size_t k = 0; k < P.lmi.size(); ++k)
    {
        CMatrix Ls;
        CMatrix Lz;
        if (!chol_factor(s.psd[k], Ls))
            Ls = sqrt_factor(s.psd[k]);
        if (!chol_factor(z.psd[k], Lz))
            Lz = sqrt_factor(z.psd[k]);
        // Lzᴴ Ls = U Λ Vᴴ. The eigenvalues of BᴴB give Λ², which is accurate
        // while Λ is well conditioned (near the central path); otherwise SVD.
        const CMatrix B = Lz.adjoint() * Ls;
        PsdScaling sc;
        RVector lam;
        const Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(B.adjoint() * B));
        const RVector lam2 = es.eigenvalues();
        if (es.info() == Eigen::Success && lam2.minCoeff() > 1e-12 * lam2.maxCoeff())
        {
            lam = lam2.cwiseSqrt();
            const RVector isq = lam.cwiseSqrt().cwiseInverse();
            sc.R = Ls * es.eigenvectors() * isq.cast<cplx>().asDiagonal();
            // Λ^{-1/2} Uᴴ Lzᴴ with U = B V Λ⁻¹
            const RVector w = isq.cwiseProduct(lam.cwiseInverse());
            sc.Rinv = w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint() * B.adjoint() * Lz.adjoint();
        }
        else
        {
            Eigen::JacobiSVD<CMatrix> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
            lam = svd.singularValues().cwiseMax(std::numeric_limits<double>::min());
            const RVector isq = lam.cwiseSqrt().cwiseInverse();
            sc.R = Ls * svd.matrixV() * isq.cast<cplx>().asDiagonal();
            sc.Rinv = isq.cast<cplx>().asDiagonal() * svd.matrixU().adjoint() * Lz.adjoint();
        }
        sc.V = sc.Rinv.adjoint() * sc.Rinv;
        W.lambda.psd.push_back(lam.cast<cplx>().asDiagonal());
        W.psd.push_back(std::move(sc));
    }
    return W;
}

// W z (dual → scaled)
ConeVec apply_W(const Scaling& W, const ConeVec& u)
{
    ConeVec o;
    o.lin = W.d.cwiseProduct(u.lin);
    for (std::size_t k = 0; k < u.soc.size(); ++k)
        o.soc.push_back(soc_W(W.soc[k], u.soc[k]));
    for (std::size_t k = 0; k < u.psd.size(); ++k)
        o.psd.push_back(W.psd[k].R.adjoint() * u.psd[k] * W.psd[k].R);
    return o;
}

// W⁻ᵀ s (primal → scaled)
ConeVec apply_Winv_T(const Scaling& W, const ConeVec& u)
{
    ConeVec o;
    o.lin = u.lin.cwiseQuotient(W.d);
    for (std::size_t k = 0; k < u.soc.size(); ++k)
        o.soc.push_back(soc_Winv(W.soc[k], u.soc[k]));
    for (std::size_t k = 0; k < u.psd.size(); ++k)
        o.psd.push_back(W.psd[k].Rinv * u.psd[k] * W.psd[k].Rinv.adjoint());
    return o;
}

// Wᵀ u (scaled → primal)
ConeVec apply_W_T(const Scaling& W, const ConeVec& u)
{
    ConeVec o;
    o.lin = W.d.cwiseProduct(u.lin);
    for (std::size_t k = 0; k < u.soc.size(); ++k)
        o.soc.push_back(soc_W(W.soc[k], u.soc[k]));
    for (std::size_t k = 0; k < u.psd.size(); ++k)
        o.psd.push_back(hermitian_part(W.psd[k].R * u.psd[k] * W.psd[k].R.adjoint()));
    return o;
}

// (WᵀW)⁻¹ u
ConeVec apply_WtW_inv(const Scaling& W, const ConeVec& u)
{
    ConeVec o;
    o.lin = u.lin.cwiseQuotient(W.d.cwiseAbs2());
    for (std::size_t k = 0; k < u.soc.size(); ++k)
        o.soc.push_back(soc_Winv(W.soc[k], soc_Winv(W.soc[k], u.soc[k])));
    for (std::size_t k = 0; k < u.psd.size(); ++k)
        o.psd.push_back(hermitian_part(W.psd[k].V * u.psd[k] * W.psd[k].V));
    return o;
}

// ---------------------------------------------------------------------------
// Jordan algebra in the scaled space
// ---------------------------------------------------------------------------

ConeVec jordan_product(const ConeVec& a, const ConeVec& b)
{
    ConeVec o;
    o.lin = a.lin.cwiseProduct(b.lin);
    for (std::size_t k = 0; k < a.soc.size(); ++k)
    {
        const RVector& x = a.soc[k];
        const RVector& y = b.soc[k];
        RVector r(x.size());
        r(0) = x.dot(y);
        r.tail(x.size() - 1) = x(0) * y.tail(y.size() - 1) + y(0) * x.tail(x.size() - 1);
        o.soc.push_back(r);
    }
    for (std::size_t k = 0; k < a.psd.size(); ++k)
        o.psd.push_back(0.5 * (a.psd[k] * b.psd[k] + b.psd[k] * a.psd[k]));
    return o;
}

// u with λ ∘ u = v
ConeVec jordan_divide(const ConeVec& lambda, const ConeVec& v)
{
    ConeVec o;
    o.lin = v.lin.cwiseQuotient(lambda.lin);
    for (std::size_t k = 0; k < v.soc.size(); ++k)
    {
        const RVector& l = lambda.soc[k];
        const RVector& w = v.soc[k];
        const Eigen::Index m = l.size() - 1;
        RVector u(l.size());
        u(0) = (l(0) * w(0) - l.tail(m).dot(w.tail(m))) / soc_det(l);
        u.tail(m) = (w.tail(m) - u(0) * l.tail(m)) / l(0);
        o.soc.push_back(u);
    }
    for (std::size_t k = 0; k < v.psd.size(); ++k)
    {
        const CMatrix& w = v.psd[k];
        const Eigen::Index d = w.rows();
        CMatrix u(d, d);
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < d; ++i)
                u(i, j) = 2.0 * w(i, j) / (lambda.psd[k](i, i).real() + lambda.psd[k](j, j).real());
        o.psd.push_back(u);
    }
    return o;
}

double soc_max_step(const RVector& x, const RVector& d)
{
    const Eigen::Index m = x.size() - 1;
    const double a = soc_det(d);
    const double b = x(0) * d(0) - x.tail(m).dot(d.tail(m));
    const double c = soc_det(x);
    const double disc = b * b - a * c;
    if (a < 0.0 || (b < 0.0 && disc >= 0.0))
        return c / (std::sqrt(std::max(disc, 0.0)) - b);
    return kInf;
}

// Largest α with λ + α d in the cone (λ from the current scaling).
double max_step(const ConeVec& lambda, const ConeVec& d)
{
    double alpha = kInf;
    for (Eigen::Index i = 0; i < d.lin.size(); ++i)
        if (d.lin(i) < 0.0)
            alpha = std::min(alpha, -lambda.lin(i) / d.lin(i));
    for (std::size_t k = 0; k < d.soc.size(); ++k)
        alpha = std::min(alpha, soc_max_step(lambda.soc[k], d.soc[k]));
    for (std::size_t k = 0; k < d.psd.size(); ++k)
    {
        const RVector isq = lambda.psd[k].diagonal().real().cwiseSqrt().cwiseInverse();
        const CMatrix m = isq.cast<cplx>().asDiagonal() * d.psd[k] * isq.cast<cplx>().asDiagonal();
        const double mn = min_eigenvalue(m);
        if (mn < 0.0)
            alpha = std::min(alpha, -1.0 / mn);
    }
    return alpha;
}

// max over cones of −(smallest "eigenvalue") of u
double cone_violation(const ConeVec& u)
{
    double t = -kInf;
    if (u.lin.size() > 0)
        t = std::max(t, -u.lin.minCoeff());
    for (const auto& v : u.soc)
        t = std::max(t, v.tail(v.size() - 1).norm() - v(0));
    for (const auto& m : u.psd)
        t = std::max(t, -min_eigenvalue(m));
    return t;
}

// ---------------------------------------------------------------------------
// Newton system
// ---------------------------------------------------------------------------

// Columns l of n2² basis elements, out(:, l) = params(U B_l Uᴴ).
void add_congruence_gram(const CMatrix& U, double scale, Eigen::Ref<RMatrix> out)
{
    const Eigen::Index n1 = U.rows();
    const Eigen::Index n2 = U.cols();
    const CMatrix Uc = U.conjugate();
    const double inv_sqrt2 = 1.0 / kSqrt2;
    for (Eigen::Index a = 0; a < n2; ++a)
    {
        for (Eigen::Index b = 0; b < n2; ++b)
        {
            const Eigen::Index l = a * n2 + b;
            double* col = out.col(l).data();
            for (Eigen::Index p = 0; p < n1; ++p)
            {
                for (Eigen::Index q = p; q < n1; ++q)
                {
                    cplx m;
                    if (a == b)
                        m = U(p, a) * Uc(q, a);
                    else if (a < b)
                        m = (U(p, a) * Uc(q, b) + U(p, b) * Uc(q, a)) * inv_sqrt2;
                    else
                        m = cplx(0.0, inv_sqrt2) * (U(p, b) * Uc(q, a) - U(p, a) * Uc(q, b));
                    if (p == q)
                    {
                        col[p * n1 + p] += scale * m.real();
                    }
                    else
                    {
                        col[p * n1 + q] += scale * kSqrt2 * m.real();
                        col[q * n1 + p] += scale * kSqrt2 * m.imag();
                    }
                }
            }
        }
    }
}

void add_lmi_hessian(const Lmi& L, const CMatrix& V, RMatrix& H)
{
    const std::size_t nc = L.congruences.size();
    std::vector<CMatrix> VL(nc);
    for (std::size_t c = 0; c < nc; ++c)
        VL[c] = V * L.congruences[c].lift;
    for (std::size_t c1 = 0; c1 < nc; ++c1)
    {
        const auto& t1 = L.congruences[c1];
        const int s1 = t1.n * t1.n;
        for (std::size_t c2 = c1; c2 < nc; ++c2)
        {
            const auto& t2 = L.congruences[c2];
            const int s2 = t2.n * t2.n;
            const CMatrix U = t1.lift.adjoint() * VL[c2];
            if (c1 == c2)
            {
                add_congruence_gram(U, t1.scale * t2.scale, H.block(t1.offset, t2.offset, s1, s2));
            }
            else
            {
                RMatrix G = RMatrix::Zero(s1, s2);
                add_congruence_gram(U, t1.scale * t2.scale, G);
                H.block(t1.offset, t2.offset, s1, s2) += G;
                H.block(t2.offset, t1.offset, s2, s1) += G.transpose();
            }
        }
    }
    const std::size_t ns = L.scalars.size();
    std::vector<CMatrix> VFV(ns);
    for (std::size_t i = 0; i < ns; ++i)
        VFV[i] = V * L.scalars[i].coeff * V;
    for (std::size_t i = 0; i < ns; ++i)
    {
        const int vi = L.scalars[i].var;
        for (std::size_t j = i; j < ns; ++j)
        {
            const int vj = L.scalars[j].var;
            const double val = herm_inner(L.scalars[j].coeff, VFV[i]);
            H(vi, vj) += val;
            if (i != j)
                H(vj, vi) += val;
        }
        for (const auto& t : L.congruences)
        {
            const RVector g = t.scale * hermitian_to_params(t.lift.adjoint() * VFV[i] * t.lift);
            H.block(vi, t.offset, 1, t.n * t.n) += g.transpose();
            H.block(t.offset, vi, t.n * t.n, 1) += g;
        }
    }
}

class NewtonSystem
{
public:
    NewtonSystem(const Problem& P, const Scaling& W, double regularization)
        : P_(P), W_(W)
    {
        const int n = P.n;
        RMatrix H = RMatrix::Zero(n, n);
        for (Eigen::Index r = 0; r < P.Clin.rows(); ++r)
        {
            const double w = 1.0 / (W.d(r) * W.d(r));
            const auto& nz = P.lin_nz[static_cast<std::size_t>(r)];
            for (int i : nz)
                for (int j : nz)
                    H(i, j) += w * P.Clin(r, i) * P.Clin(r, j);
        }
        for (std::size_t k = 0; k < P.soc.size(); ++k)
        {
            const auto& s = P.soc[k];
            const auto& w = W.soc[k];
            const RVector v = soc_J(w.wbar);
            const RVector pv = s.C.transpose() * v;
            const RVector qv = s.C.transpose() * soc_J(v);
            const double ib2 = 1.0 / (w.beta * w.beta);
            H += ib2 * (4.0 * v.squaredNorm() * pv * pv.transpose() - 2.0 * (pv * qv.transpose() + qv * pv.transpose()) + s.CtC);
        }
        for (std::size_t k = 0; k < P.lmi.size(); ++k)
            add_lmi_hessian(P.lmi[k], W.psd[k].V, H);
        H = 0.5 * (H + H.transpose());
        if (P.p() > 0)
            H += P.A.transpose() * P.A;

        const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        double reg = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt)
        {
            RMatrix Hr = H;
            if (reg > 0.0)
                Hr.diagonal().array() += reg * scale;
            llt_.compute(Hr);
            if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0)
            {
                ok_ = true;
                regularized_ = reg > 0.0;
                break;
            }
            reg = reg == 0.0 ? std::max(regularization, 1e-14) : reg * 100.0;
        }
        if (ok_ && P.p() > 0)
        {
            HinvAt_ = llt_.solve(P.A.transpose());
            schur_.compute(P.A * HinvAt_);
            ok_ = schur_.info() == Eigen::Success;
        }
    }

    [[nodiscard]] bool ok() const { return ok_; }
    [[nodiscard]] bool regularized() const { return regularized_; }

    //   Aᵀy − Mᵀz        = rx
    //   A x              = ry
    //  −M x − WᵀW z      = rz
    void solve(const RVector& rx, const RVector& ry, const ConeVec& rz, RVector& x, RVector& y, ConeVec& z,
               int refinement = 3) const
    {
        solve_once(rx, ry, rz, x, y, z);
        const double scale = std::max({rx.norm(), ry.norm(), norm(rz), 1e-300});
        for (int it = 0; it < refinement; ++it)
        {
            RVector ex;
            RVector ey;
            ConeVec ez;
            residual(rx, ry, rz, x, y, z, ex, ey, ez);
            if (std::max({ex.norm(), ey.norm(), norm(ez)}) <= 1e-14 * scale)
                break;
            RVector dx;
            RVector dy;
            ConeVec dz;
            solve_once(ex, ey, ez, dx, dy, dz);
            x += dx;
            y += dy;
            axpy(1.0, dz, z);
        }
    }

private:
    void solve_once(const RVector& rx, const RVector& ry, const ConeVec& rz, RVector& x, RVector& y, ConeVec& z) const
    {
        RVector rhs = rx - apply_Mt(P_, apply_WtW_inv(W_, rz));
        if (P_.p() > 0)
        {
            rhs += P_.A.transpose() * ry;
            const RVector Hr = llt_.solve(rhs);
            y = schur_.solve(P_.A * Hr - ry);
            x = Hr - HinvAt_ * y;
        }
        else
        {
            y = RVector::Zero(0);
            x = llt_.solve(rhs);
        }
        ConeVec t = apply_M(P_, x);
        axpy(1.0, rz, t);
        z = scaled(-1.0, apply_WtW_inv(W_, t));
    }

    void residual(const RVector& rx, const RVector& ry, const ConeVec& rz, const RVector& x, const RVector& y,
                  const ConeVec& z, RVector& ex, RVector& ey, ConeVec& ez) const
    {
        ex = rx - apply_Mt(P_, z) * -1.0;
        if (P_.p() > 0)
            ex -= P_.A.transpose() * y;
        ey = ry - P_.A * x;
        // rz − (−Mx − WᵀW z)
        ez = rz;
        axpy(1.0, apply_M(P_, x), ez);
        axpy(1.0, apply_W_T(W_, apply_W(W_, z)), ez);
    }

    const Problem& P_;
    const Scaling& W_;
    Eigen::LLT<RMatrix> llt_;
    Eigen::LLT<RMatrix> schur_;
    RMatrix HinvAt_;
    bool ok_ = false;
    bool regularized_ = false;
};

void shift_into_cone(const ConeVec& e, ConeVec& u)
{
    const double t = cone_violation(u);
    if (t >= -1e-8 * std::max(norm(u), 1.0))
        axpy(1.0 + t, e, u);
}

}  // namespace

SolverSolution solve(const ConicProgram& program, const SolverConfig& config)
{
    config.validate();
    program.validate();
    const Problem P = compile(program);
    const int n = P.n;
    const int p = P.p();
    const ConeVec h = constant_part(P);
    const ConeVec e = identity_element(P);

    SolverSolution sol;
    const double sense = program.maximize ? -1.0 : 1.0;

    const double resx0 = std::max(1.0, P.c.norm());
    const double resy0 = std::max(1.0, P.b.norm());
    const double resz0 = std::max(1.0, norm(h));

    // Starting point: least-norm primal slack and dual multiplier, shifted
    // into the cone interior.
    RVector x;
    RVector y;
    ConeVec s;
    ConeVec z;
    {
        const Scaling I = identity_scaling(P);
        NewtonSystem K0(P, I, config.regularization);
        if (!K0.ok())
        {
            sol.status = SolverStatus::numerical_failure;
            sol.diagnostic = "initial Newton matrix is singular (a variable appears in no cone or equality)";
            sol.x = RVector::Zero(n);
            return sol;
        }
        // −Mx − z = h  ⇒  s = h + Mx = −z, of least norm subject to Ax = b
        ConeVec zp;
        K0.solve(RVector::Zero(n), P.b, h, x, y, zp);
        s = scaled(-1.0, zp);
        ConeVec zero = scaled(0.0, h);
        RVector xd;
        K0.solve(-P.c, RVector::Zero(p), zero, xd, y, z);
        // Aᵀy − Mᵀz = −c  ⇒  z is a least-norm dual multiplier
        shift_into_cone(e, s);
        shift_into_cone(e, z);
    }
    double tau = 1.0;
    double kappa = 1.0;

    struct Snapshot
    {
        RVector x, y;
        ConeVec s, z;
        double tau = 0.0, kappa = 0.0;
        double score = kInf;  // worst of the residuals and gap, in units of their tolerances
    } best;
    bool restored = false;

    int stalls = 0;
    for (int iter = 0;; ++iter)
    {
        const ConeVec Mx = apply_M(P, x);
        const RVector Mtz = apply_Mt(P, z);
        RVector rx = -Mtz + tau * P.c;
        if (p > 0)
            rx += P.A.transpose() * y;
        const RVector ry = (p > 0) ? RVector(P.A * x - tau * P.b) : RVector::Zero(0);
        ConeVec rz = s;
        axpy(-1.0, Mx, rz);
        axpy(-tau, h, rz);
        const double cx = P.c.dot(x);
        const double by = (p > 0) ? P.b.dot(y) : 0.0;
        const double hz = dot(h, z);
        const double rt = kappa + cx + by + hz;
        const double sz = dot(s, z);
        const double mu = (sz + tau * kappa) / (P.degree + 1);

        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        const double gap = sz / (tau * tau);
        double relgap = kInf;
        if (pcost < 0.0)
            relgap = gap / -pcost;
        else if (dcost > 0.0)
            relgap = gap / dcost;
        const double pres = std::max(ry.size() ? ry.norm() / tau / resy0 : 0.0, norm(rz) / tau / resz0);
        const double dres = rx.norm() / tau / resx0;

        double pinfres = kInf;
        if (hz + by < 0.0)
        {
            RVector hrx = -Mtz;
            if (p > 0)
                hrx += P.A.transpose() * y;
            pinfres = hrx.norm() / resx0 / -(hz + by);
        }
        double dinfres = kInf;
        if (cx < 0.0)
        {
            ConeVec hrz = s;
            axpy(-1.0, Mx, hrz);
            const double ay = (p > 0) ? (P.A * x).norm() / resy0 : 0.0;
            dinfres = std::max(ay, norm(hrz) / resz0) / -cx;
        }

        IterationRecord rec;
        rec.iteration = iter;
        rec.primal_objective = sense * pcost;
        rec.dual_objective = sense * dcost;
        rec.primal_residual = pres;
        rec.dual_residual = dres;
        rec.gap = gap;
        rec.tau = tau;
        rec.kappa = kappa;
        sol.log.push_back(rec);

        const auto finish = [&](SolverStatus st, const std::string& why) {
            sol.status = st;
            sol.iterations = iter;
            sol.diagnostic = why;
            if (st == SolverStatus::infeasible)
            {
                const double scale = -(hz + by);
                sol.x = RVector::Zero(n);
                sol.y = y / scale;
                z = scaled(1.0 / scale, z);
            }
            else if (st == SolverStatus::unbounded)
            {
                sol.x = x / -cx;
                sol.y = RVector::Zero(p);
                z = scaled(0.0, z);
            }
            else
            {
                sol.x = x / tau;
                sol.y = y / tau;
                z = scaled(1.0 / tau, z);
            }
            sol.z_linear = z.lin;
            sol.z_soc = z.soc;
            sol.z_lmi = z.psd;
            sol.objective = program.objective.dot(sol.x);
            sol.dual_objective = sense * dcost;
            sol.absolute_gap = gap;
            sol.duality_gap = std::isfinite(relgap) ? std::min(relgap, gap) : gap;
            sol.primal_residual = pres;
            sol.dual_residual = dres;
            return sol;
        };

        if (restored)
            return finish(SolverStatus::optimal, "converged to reduced accuracy");
        // Fall back to the best nearly optimal iterate instead of failing.
        const auto fail = [&](SolverStatus st, const std::string& why) {
            if (!std::isfinite(best.score))
                return finish(st, why);
            x = best.x;
            y = best.y;
            s = best.s;
            z = best.z;
            tau = best.tau;
            kappa = best.kappa;
            restored = true;
            return SolverSolution{};
        };

        if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap))
        {
            SolverSolution r = fail(SolverStatus::numerical_failure, "non-finite iterate");
            if (restored)
                continue;
            return r;
        }
        if (pres <= config.feas_tol && dres <= config.feas_tol && (gap <= config.gap_tol || relgap <= config.gap_tol))
            return finish(SolverStatus::optimal, "converged");
        {
            const double score = std::max({pres / config.feas_tol, dres / config.feas_tol,
                                           std::min(gap, relgap) / config.gap_tol});
            if (score <= config.reduced_accuracy_factor && score < best.score)
                best = {x, y, s, z, tau, kappa, score};
        }
        if (pinfres <= config.feas_tol)
            return finish(SolverStatus::infeasible, "primal infeasibility certificate found");
        if (dinfres <= config.feas_tol)
            return finish(SolverStatus::unbounded, "dual infeasibility certificate found");
        if (iter >= config.max_iters)
        {
            SolverSolution r = fail(SolverStatus::iteration_limit, "iteration limit reached");
            if (restored)
                continue;
            return r;
        }

        const Scaling W = compute_scaling(P, s, z);
        const NewtonSystem K(P, W, config.regularization);
        if (!K.ok())
        {
            SolverSolution r = fail(SolverStatus::numerical_failure, "Newton matrix factorization failed");
            if (restored)
                continue;
            return r;
        }

        RVector xc;
        RVector yc;
        ConeVec zc;
        K.solve(-P.c, P.b, h, xc, yc, zc);
        const double tau_den = P.c.dot(xc) + (p > 0 ? P.b.dot(yc) : 0.0) + dot(h, zc) - kappa / tau;

        const ConeVec& lam = W.lambda;
        const ConeVec lamsq = jordan_product(lam, lam);
        ConeVec ds_aff;
        ConeVec dz_aff;
        double dtau_aff = 0.0;
        double dkappa_aff = 0.0;
        double sigma = 0.0;

        RVector dx;
        RVector dy;
        ConeVec dz;
        ConeVec ds;
        double dtau = 0.0;
        double dkappa = 0.0;
        double step = 0.0;

        for (int pass = 0; pass < 2; ++pass)
        {
            ConeVec rs = scaled(-1.0, lamsq);
            double rk = -tau * kappa;
            if (pass == 1)
            {
                if (config.mehrotra)
                {
                    axpy(-1.0, jordan_product(ds_aff, dz_aff), rs);
                    rk -= dtau_aff * dkappa_aff;
                }
                axpy(sigma * mu, e, rs);
                rk += sigma * mu;
            }
            const ConeVec lrs = jordan_divide(lam, rs);
            ConeVec bz = scaled(-1.0, rz);
            axpy(-1.0, apply_W_T(W, lrs), bz);
            RVector xa;
            RVector ya;
            ConeVec za;
            K.solve(-rx, p > 0 ? RVector(-ry) : RVector::Zero(0), bz, xa, ya, za);
            dtau = (-rt - rk / tau - P.c.dot(xa) - (p > 0 ? P.b.dot(ya) : 0.0) - dot(h, za)) / tau_den;
            dx = xa + dtau * xc;
            dy = (p > 0) ? RVector(ya + dtau * yc) : RVector::Zero(0);
            dz = za;
            axpy(dtau, zc, dz);
            dkappa = (rk - kappa * dtau) / tau;

            // scaled directions
            // ds from the primal equation rather than through W keeps the
            // cone residual from drifting once the scaling is ill-conditioned
            const ConeVec dzs = apply_W(W, dz);
            ds = apply_M(P, dx);
            axpy(dtau, h, ds);
            axpy(-1.0, rz, ds);
            const ConeVec dss = apply_Winv_T(W, ds);

            double amax = std::min(max_step(lam, dss), max_step(lam, dzs));
            if (dtau < 0.0)
                amax = std::min(amax, -tau / dtau);
            if (dkappa < 0.0)
                amax = std::min(amax, -kappa / dkappa);

            if (pass == 0)
            {
                const double a_aff = std::min(1.0, amax);
                sigma = std::pow(1.0 - a_aff, 3);
                ds_aff = dss;
                dz_aff = dzs;
                dtau_aff = dtau;
                dkappa_aff = dkappa;
            }
            else
            {
                step = std::min(1.0, config.step_fraction * amax);
            }
        }

        sol.log.back().step = step;
        if (!(step > 1e-12) || !all_finite(ds) || !all_finite(dz) || !dx.allFinite())
        {
            if (++stalls >= 3 || !std::isfinite(step))
            {
                SolverSolution r = fail(SolverStatus::numerical_failure, "step length collapsed");
                if (restored)
                    continue;
                return r;
            }
        }
        else
        {
            stalls = 0;
        }

        x += step * dx;
        if (p > 0)
            y += step * dy;
        axpy(step, ds, s);
        axpy(step, dz, z);
        tau += step * dtau;
        kappa += step * dkappa;
        // keep the PSD blocks exactly Hermitian
        for (auto& m : s.psd)
            m = hermitian_part(m);
        for (auto& m : z.psd)
            m = hermitian_part(m);
    }
}

CertificationReport certify(const ConicProgram& program, const RVector& x)
{
    if (x.size() != program.num_vars())
        throw std::invalid_argument("certify: assignment length does not match the program");
    CertificationReport rep;
    rep.objective = program.objective.dot(x);
    const auto consider = [&rep](double violation, const std::string& name) {
        if (violation > rep.max_violation || rep.worst_constraint.empty())
        {
            if (violation > rep.max_violation)
                rep.max_violation = violation;
            rep.worst_constraint = name;
        }
    };
    rep.max_violation = 0.0;
    for (std::size_t k = 0; k < program.lmis.size(); ++k)
    {
        // Evaluate the block directly from the stored data.
        const auto& lmi = program.lmis[k];
        CMatrix f = lmi.constant;
        for (const auto& t : lmi.scalars)
            f += x(t.var) * t.coeff;
        for (const auto& t : lmi.congruences)
        {
            const auto& v = program.variables()[static_cast<std::size_t>(t.block)];
            CMatrix X(v.dim, v.dim);
            const double r2 = 1.0 / kSqrt2;
            for (int a = 0; a < v.dim; ++a)
            {
                X(a, a) = x(v.offset + a * v.dim + a);
                for (int b = a + 1; b < v.dim; ++b)
                {
                    X(a, b) = cplx(x(v.offset + a * v.dim + b) * r2, x(v.offset + b * v.dim + a) * r2);
                    X(b, a) = std::conj(X(a, b));
                }
            }
            f += t.scale * (t.lift * X * t.lift.adjoint());
        }
        const double lmin = min_eigenvalue(0.5 * (f + f.adjoint()));
        rep.lmi_min_eigenvalues.push_back(lmin);
        consider(std::max(0.0, -lmin), "lmi:" + lmi.name);
    }
    for (const auto& soc : program.socs)
    {
        const RVector u = soc.constant + soc.coeff * x;
        const double margin = u(0) - u.tail(u.size() - 1).norm();
        rep.soc_margins.push_back(margin);
        consider(std::max(0.0, -margin), "soc:" + soc.name);
    }
    rep.linear_min = kInf;
    for (int r = 0; r < program.linear.rows(); ++r)
    {
        const double v = program.linear.constant(r) + program.linear.coeff.row(r).dot(x);
        rep.linear_min = std::min(rep.linear_min, v);
        consider(std::max(0.0, -v), "linear:" + program.linear.names[static_cast<std::size_t>(r)]);
    }
    if (program.linear.rows() == 0)
        rep.linear_min = 0.0;
    for (int r = 0; r < program.equalities.rows(); ++r)
    {
        const double v = std::abs(program.equalities.coeff.row(r).dot(x) - program.equalities.rhs(r));
        rep.equality_max_abs = std::max(rep.equality_max_abs, v);
        consider(v, "equality:" + program.equalities.names[static_cast<std::size_t>(r)]);
    }
    return rep;
}

CertificationReport certify(const ConicProgram& program, const SolverSolution& solution)
{
    return certify(program, solution.x);
}

}  // namespace rcc
