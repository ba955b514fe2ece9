// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcc
{

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Thrown when a matrix that must be Hermitian is not.
class SymmetryError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Square complex matrix that is conjugate-symmetric to within a relative
/// tolerance. Construction symmetrizes, so downstream code sees an exactly
/// Hermitian matrix.
class HermitianMatrix
{
public:
    static constexpr double kDefaultTolerance = 1e-12;

    HermitianMatrix() = default;
    explicit HermitianMatrix(const CMatrix& m, double rel_tol = kDefaultTolerance);

    static HermitianMatrix zero(int n);
    static HermitianMatrix identity(int n);
    static HermitianMatrix outer(const CVector& v);
    static HermitianMatrix diagonal(const RVector& d);

    [[nodiscard]] int dim() const { return static_cast<int>(m_.rows()); }
    [[nodiscard]] const CMatrix& matrix() const { return m_; }
    [[nodiscard]] cplx operator()(int r, int c) const { return m_(r, c); }

    [[nodiscard]] double trace() const { return m_.trace().real(); }
    [[nodiscard]] double frobenius_norm() const { return m_.norm(); }
    /// v^H A v, real for Hermitian A.
    [[nodiscard]] double quadratic_form(const CVector& v) const;

    HermitianMatrix& operator+=(const HermitianMatrix& o);
    HermitianMatrix& operator-=(const HermitianMatrix& o);
    HermitianMatrix& operator*=(double s);

    friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
    friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
    friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
    friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }

private:
    CMatrix m_;
};

/// ‖A − A^H‖_F / max(‖A‖_F, tiny).
double hermitian_defect(const CMatrix& a);

/// (A + A^H)/2
CMatrix hermitian_part(const CMatrix& a);

struct EigenDecomposition
{
    RVector values;            // descending
    std::vector<CVector> vectors;  // orthonormal, vectors[i] pairs with values[i]

    [[nodiscard]] CMatrix vector_matrix() const;
};

EigenDecomposition hermitian_eigendecompose(const HermitianMatrix& a);

/// Eigenvalues only, ascending. Input is symmetrized before the solve.
RVector hermitian_eigenvalues(const CMatrix& a);

double min_eigenvalue(const CMatrix& a);

/// [[Re A, −Im A], [Im A, Re A]]: PSD iff A is PSD, spectrum of A doubled.
RMatrix realify_psd(const HermitianMatrix& a);

bool is_psd(const HermitianMatrix& a, double tol);

/// Projection onto the PSD cone (negative eigenvalues clipped).
HermitianMatrix project_psd(const HermitianMatrix& a);

// ---------------------------------------------------------------------------
// Real parametrization of n×n Hermitian matrices by n² reals in an orthonormal
// basis (Frobenius norm of X equals Euclidean norm of its parameters).
//
// Layout is row-major over an n×n grid:
//   p[a*n+a] = X(a,a)
//   p[a*n+b] = √2·Re X(a,b)   (a < b)
//   p[b*n+a] = √2·Im X(a,b)   (a < b)
// ---------------------------------------------------------------------------

RVector hermitian_to_params(const CMatrix& x);
CMatrix params_to_hermitian(const Eigen::Ref<const RVector>& p, int n);

/// Basis element B_k for parameter index k.
CMatrix hermitian_basis(int n, int k);

/// Re Tr(B_k P) for every basis element, for an arbitrary square P.
RVector basis_inner(const CMatrix& p);

}  // namespace rcc
