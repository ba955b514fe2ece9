// SPDX-License-Identifier: Apache-2.0
#include "rcc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace rcc
{

namespace
{
constexpr double kSqrt2 = 1.4142135623730950488;
}

double hermitian_defect(const CMatrix& a)
{
    if (a.rows() != a.cols())
        return std::numeric_limits<double>::infinity();
    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
    return (a - a.adjoint()).norm() / scale;
}

CMatrix hermitian_part(const CMatrix& a)
{
    return 0.5 * (a + a.adjoint());
}

HermitianMatrix::HermitianMatrix(const CMatrix& m, double rel_tol)
{
    if (m.rows() != m.cols())
    {
        std::ostringstream os;
        os << "HermitianMatrix: matrix is " << m.rows() << "x" << m.cols() << ", not square";
        throw SymmetryError(os.str());
    }
    if (!m.allFinite())
        throw SymmetryError("HermitianMatrix: non-finite entry");
    const double defect = hermitian_defect(m);
    if (m.size() > 0 && m.norm() > 0.0 && defect > rel_tol)
    {
        std::ostringstream os;
        os << "HermitianMatrix: symmetry violation ‖A−A^H‖/‖A‖ = " << defect << " exceeds " << rel_tol;
        throw SymmetryError(os.str());
    }
    m_ = hermitian_part(m);
}

HermitianMatrix HermitianMatrix::zero(int n)
{
    return HermitianMatrix(CMatrix::Zero(n, n));
}

HermitianMatrix HermitianMatrix::identity(int n)
{
    return HermitianMatrix(CMatrix::Identity(n, n));
}

HermitianMatrix HermitianMatrix::outer(const CVector& v)
{
    return HermitianMatrix(v * v.adjoint());
}

HermitianMatrix HermitianMatrix::diagonal(const RVector& d)
{
    CMatrix m = CMatrix::Zero(d.size(), d.size());
    m.diagonal() = d.cast<cplx>();
    return HermitianMatrix(m);
}

double HermitianMatrix::quadratic_form(const CVector& v) const
{
    return v.dot(m_ * v).real();
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& o)
{
    m_ += o.m_;
    return *this;
}

HermitianMatrix& HermitianMatrix::operator-=(const HermitianMatrix& o)
{
    m_ -= o.m_;
    return *this;
}

HermitianMatrix& HermitianMatrix::operator*=(double s)
{
    m_ *= s;
    return *this;
}

CMatrix EigenDecomposition::vector_matrix() const
{
    if (vectors.empty())
        return {};
    CMatrix v(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t i = 0; i < vectors.size(); ++i)
        v.col(static_cast<Eigen::Index>(i)) = vectors[i];
    return v;
}

EigenDecomposition hermitian_eigendecompose(const HermitianMatrix& a)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a.matrix()));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigendecompose: eigensolver did not converge");
    const Eigen::Index n = a.dim();
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
    {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.emplace_back(es.eigenvectors().col(n - 1 - i));
    }
    return out;
}

RVector hermitian_eigenvalues(const CMatrix& a)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double min_eigenvalue(const CMatrix& a)
{
    if (a.size() == 0)
        return 0.0;
    return hermitian_eigenvalues(a)(0);
}

RMatrix realify_psd(const HermitianMatrix& a)
{
    const Eigen::Index n = a.dim();
    const RMatrix re = a.matrix().real();
    const RMatrix im = a.matrix().imag();
    RMatrix out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = re;
    out.topRightCorner(n, n) = -im;
    out.bottomLeftCorner(n, n) = im;
    out.bottomRightCorner(n, n) = re;
    return out;
}

bool is_psd(const HermitianMatrix& a, double tol)
{
    return min_eigenvalue(a.matrix()) >= -tol;
}

HermitianMatrix project_psd(const HermitianMatrix& a)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
    const RVector d = es.eigenvalues().cwiseMax(0.0);
    return HermitianMatrix(hermitian_part(es.eigenvectors() * d.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint()));
}

RVector hermitian_to_params(const CMatrix& x)
{
    const Eigen::Index n = x.rows();
    RVector p(n * n);
    for (Eigen::Index a = 0; a < n; ++a)
    {
        p(a * n + a) = x(a, a).real();
        for (Eigen::Index b = a + 1; b < n; ++b)
        {
            const cplx v = 0.5 * (x(a, b) + std::conj(x(b, a)));
            p(a * n + b) = kSqrt2 * v.real();
            p(b * n + a) = kSqrt2 * v.imag();
        }
    }
    return p;
}

CMatrix params_to_hermitian(const Eigen::Ref<const RVector>& p, int n)
{
    if (p.size() != static_cast<Eigen::Index>(n) * n)
        throw std::invalid_argument("params_to_hermitian: parameter count mismatch");
    CMatrix x(n, n);
    for (int a = 0; a < n; ++a)
    {
        x(a, a) = p(a * n + a);
        for (int b = a + 1; b < n; ++b)
        {
            const cplx v(p(a * n + b) / kSqrt2, p(b * n + a) / kSqrt2);
            x(a, b) = v;
            x(b, a) = std::conj(v);
        }
    }
    return x;
}

CMatrix hermitian_basis(int n, int k)
{
    CMatrix b = CMatrix::Zero(n, n);
    const int r = k / n;
    const int c = k % n;
    if (r == c)
    {
        b(r, r) = 1.0;
    }
    else if (r < c)
    {
        b(r, c) = 1.0 / kSqrt2;
        b(c, r) = 1.0 / kSqrt2;
    }
    else
    {
        // imaginary part of entry (c, r), c < r
        b(c, r) = cplx(0.0, 1.0 / kSqrt2);
        b(r, c) = cplx(0.0, -1.0 / kSqrt2);
    }
    return b;
}

RVector basis_inner(const CMatrix& p)
{
    // Re Tr(B P) = Re Tr(B herm(P)) for Hermitian B, and the basis is orthonormal.
    return hermitian_to_params(p);
}

}  // namespace rcc
