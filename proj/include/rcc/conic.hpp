// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rcc/linalg.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rcc
{

/// A named block of decision variables. Scalars take one slot of the flat
/// variable vector; an n×n Hermitian matrix takes n² slots in the
/// parametrization of `hermitian_to_params`.
struct VariableBlock
{
    enum class Kind
    {
        scalar,
        hermitian
    };

    std::string name;
    Kind kind = Kind::scalar;
    int dim = 1;     // matrix side for hermitian blocks
    int offset = 0;  // first slot in the flat vector

    [[nodiscard]] int size() const { return kind == Kind::scalar ? 1 : dim * dim; }
};

/// coeff · x[var]
struct ScalarTerm
{
    int var = 0;  // flat slot
    CMatrix coeff;
};

/// scale · L X L^H for the Hermitian matrix variable X = variables[block]
struct CongruenceTerm
{
    int block = 0;  // index into ConicProgram::variables
    double scale = 1.0;
    CMatrix lift;  // d × n
};

/// constant + Σ scalar terms + Σ congruence terms ⪰ 0 (Hermitian, d×d)
struct LmiConstraint
{
    std::string name;
    int dim = 0;
    CMatrix constant;
    std::vector<ScalarTerm> scalars;
    std::vector<CongruenceTerm> congruences;
};

/// u = constant + coeff·x with u0 ≥ ‖u[1:]‖
struct SocConstraint
{
    std::string name;
    RMatrix coeff;
    RVector constant;
};

/// constant + coeff·x ≥ 0, componentwise
struct LinearConstraints
{
    std::vector<std::string> names;
    RMatrix coeff;
    RVector constant;

    [[nodiscard]] int rows() const { return static_cast<int>(coeff.rows()); }
};

/// coeff·x = rhs
struct EqualityConstraints
{
    std::vector<std::string> names;
    RMatrix coeff;
    RVector rhs;

    [[nodiscard]] int rows() const { return static_cast<int>(coeff.rows()); }
};

/// Conic program in a solver-neutral form:
///
///   maximize / minimize  objectiveᵀ x
///   subject to           LMI blocks ⪰ 0, second-order cones, linear rows ≥ 0,
///                        equality rows.
///
/// Variables are real; Hermitian matrix variables are stored through their
/// real parametrization so every constraint is affine in the flat vector.
class ConicProgram
{
public:
    int add_scalar(const std::string& name);              // returns the flat slot
    int add_hermitian(const std::string& name, int dim);  // returns the block index

    [[nodiscard]] int num_vars() const { return num_vars_; }
    [[nodiscard]] const std::vector<VariableBlock>& variables() const { return variables_; }
    [[nodiscard]] const VariableBlock& variable(const std::string& name) const;
    [[nodiscard]] std::optional<int> find_variable(const std::string& name) const;
    /// Flat slot of a scalar variable.
    [[nodiscard]] int slot(const std::string& name) const;

    bool maximize = false;
    RVector objective;  // size num_vars()

    std::vector<LmiConstraint> lmis;
    std::vector<SocConstraint> socs;
    LinearConstraints linear;
    EqualityConstraints equalities;

    /// Append one row to the linear inequality set.
    void add_linear_row(const std::string& name, const RVector& coeff, double constant);
    void add_equality_row(const std::string& name, const RVector& coeff, double rhs);

    /// Resize objective / constraint matrices after variables are declared.
    void finalize_layout();

    /// Throws std::invalid_argument when a term references an undeclared
    /// variable, a dimension disagrees, or a block is not Hermitian.
    void validate() const;

    // Evaluation helpers
    [[nodiscard]] CMatrix evaluate_lmi(int index, const RVector& x) const;
    [[nodiscard]] RVector evaluate_soc(int index, const RVector& x) const;
    [[nodiscard]] RVector evaluate_linear(const RVector& x) const;
    [[nodiscard]] RVector evaluate_equalities(const RVector& x) const;
    [[nodiscard]] double objective_value(const RVector& x) const { return objective.dot(x); }

    /// Value of a Hermitian matrix variable in assignment x.
    [[nodiscard]] CMatrix matrix_value(const std::string& name, const RVector& x) const;
    [[nodiscard]] double scalar_value(const std::string& name, const RVector& x) const;

    /// Counts used for bookkeeping: sum over cones of their order
    /// (LMI side length, SOC length, linear rows) plus equality rows.
    struct Dimensions
    {
        int variables = 0;
        int lmi_blocks = 0;
        int lmi_total_side = 0;
        int soc_blocks = 0;
        int soc_total_length = 0;
        int linear_rows = 0;
        int equality_rows = 0;
    };
    [[nodiscard]] Dimensions dimensions() const;

private:
    std::vector<VariableBlock> variables_;
    int num_vars_ = 0;
};

/// Expand every congruence term into per-parameter scalar terms, realify each
/// Hermitian block with `realify_psd` and, when `embed_soc` is set, replace
/// each second-order cone by its arrow matrix [[u0, u1ᵀ], [u1, u0·I]] ⪰ 0.
/// The result only has real symmetric LMI blocks, linear rows and equalities.
ConicProgram realify_program(const ConicProgram& program, bool embed_soc);

/// Complex matrix as rows of [re, im] pairs.
nlohmann::json complex_matrix_json(const CMatrix& m);
CMatrix complex_matrix_from_json(const nlohmann::json& j);

/// JSON text form: variable blocks, then constraints with matrices written
/// row-major as [re, im] pairs. See README for the schema.
nlohmann::json to_json(const ConicProgram& program);
ConicProgram conic_program_from_json(const nlohmann::json& j);

}  // namespace rcc
