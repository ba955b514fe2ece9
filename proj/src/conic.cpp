// SPDX-License-Identifier: Apache-2.0
#include "rcc/conic.hpp"

#include <sstream>
#include <stdexcept>

namespace rcc
{

int ConicProgram::add_scalar(const std::string& name)
{
    if (find_variable(name))
        throw std::invalid_argument("ConicProgram: duplicate variable '" + name + "'");
    variables_.push_back({name, VariableBlock::Kind::scalar, 1, num_vars_});
    return num_vars_++;
}

int ConicProgram::add_hermitian(const std::string& name, int dim)
{
    if (dim <= 0)
        throw std::invalid_argument("ConicProgram: matrix variable needs positive dimension");
    if (find_variable(name))
        throw std::invalid_argument("ConicProgram: duplicate variable '" + name + "'");
    variables_.push_back({name, VariableBlock::Kind::hermitian, dim, num_vars_});
    num_vars_ += dim * dim;
    return static_cast<int>(variables_.size()) - 1;
}

std::optional<int> ConicProgram::find_variable(const std::string& name) const
{
    for (std::size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i].name == name)
            return static_cast<int>(i);
    return std::nullopt;
}

const VariableBlock& ConicProgram::variable(const std::string& name) const
{
    const auto idx = find_variable(name);
    if (!idx)
        throw std::invalid_argument("ConicProgram: unknown variable '" + name + "'");
    return variables_[static_cast<std::size_t>(*idx)];
}

int ConicProgram::slot(const std::string& name) const
{
    const auto& v = variable(name);
    if (v.kind != VariableBlock::Kind::scalar)
        throw std::invalid_argument("ConicProgram: '" + name + "' is not a scalar");
    return v.offset;
}

void ConicProgram::finalize_layout()
{
    const int n = num_vars_;
    if (objective.size() != n)
    {
        RVector c = RVector::Zero(n);
        c.head(std::min<Eigen::Index>(objective.size(), n)) = objective.head(std::min<Eigen::Index>(objective.size(), n));
        objective = c;
    }
    if (linear.coeff.cols() != n)
    {
        RMatrix g = RMatrix::Zero(linear.coeff.rows(), n);
        g.leftCols(std::min<Eigen::Index>(linear.coeff.cols(), n)) = linear.coeff.leftCols(std::min<Eigen::Index>(linear.coeff.cols(), n));
        linear.coeff = g;
    }
    if (equalities.coeff.cols() != n)
    {
        RMatrix a = RMatrix::Zero(equalities.coeff.rows(), n);
        a.leftCols(std::min<Eigen::Index>(equalities.coeff.cols(), n)) = equalities.coeff.leftCols(std::min<Eigen::Index>(equalities.coeff.cols(), n));
        equalities.coeff = a;
    }
    if (linear.constant.size() != linear.coeff.rows())
        linear.constant.conservativeResize(linear.coeff.rows());
    if (equalities.rhs.size() != equalities.coeff.rows())
        equalities.rhs.conservativeResize(equalities.coeff.rows());
}

void ConicProgram::add_linear_row(const std::string& name, const RVector& coeff, double constant)
{
    finalize_layout();
    if (coeff.size() != num_vars_)
        throw std::invalid_argument("add_linear_row: coefficient length mismatch for '" + name + "'");
    const Eigen::Index r = linear.coeff.rows();
    linear.coeff.conservativeResize(r + 1, num_vars_);
    linear.coeff.row(r) = coeff.transpose();
    linear.constant.conservativeResize(r + 1);
    linear.constant(r) = constant;
    linear.names.push_back(name);
}

void ConicProgram::add_equality_row(const std::string& name, const RVector& coeff, double rhs)
{
    finalize_layout();
    if (coeff.size() != num_vars_)
        throw std::invalid_argument("add_equality_row: coefficient length mismatch for '" + name + "'");
    const Eigen::Index r = equalities.coeff.rows();
    equalities.coeff.conservativeResize(r + 1, num_vars_);
    equalities.coeff.row(r) = coeff.transpose();
    equalities.rhs.conservativeResize(r + 1);
    equalities.rhs(r) = rhs;
    equalities.names.push_back(name);
}

void ConicProgram::validate() const
{
    const auto fail = [](const std::string& what) { throw std::invalid_argument("ConicProgram: " + what); };
    if (objective.size() != num_vars_)
        fail("objective length does not match variable count");
    for (const auto& lmi : lmis)
    {
        if (lmi.constant.rows() != lmi.dim || lmi.constant.cols() != lmi.dim)
            fail("constant of '" + lmi.name + "' has wrong shape");
        if (lmi.dim > 0 && hermitian_defect(lmi.constant) > 1e-12 && lmi.constant.norm() > 0)
            fail("constant of '" + lmi.name + "' is not Hermitian");
        for (const auto& t : lmi.scalars)
        {
            if (t.var < 0 || t.var >= num_vars_)
                fail("scalar term of '" + lmi.name + "' references an undeclared slot");
            if (t.coeff.rows() != lmi.dim || t.coeff.cols() != lmi.dim)
                fail("scalar term of '" + lmi.name + "' has wrong shape");
            if (t.coeff.norm() > 0 && hermitian_defect(t.coeff) > 1e-12)
                fail("scalar term of '" + lmi.name + "' is not Hermitian");
        }
        for (const auto& t : lmi.congruences)
        {
            if (t.block < 0 || t.block >= static_cast<int>(variables_.size()))
                fail("congruence term of '" + lmi.name + "' references an undeclared block");
            const auto& v = variables_[static_cast<std::size_t>(t.block)];
            if (v.kind != VariableBlock::Kind::hermitian)
                fail("congruence term of '" + lmi.name + "' applied to a scalar");
            if (t.lift.rows() != lmi.dim || t.lift.cols() != v.dim)
                fail("congruence term of '" + lmi.name + "' has wrong lift shape");
        }
    }
    for (const auto& soc : socs)
    {
        if (soc.coeff.cols() != num_vars_ || soc.coeff.rows() != soc.constant.size() || soc.constant.size() < 1)
            fail("second-order cone '" + soc.name + "' has inconsistent shape");
    }
    if (linear.coeff.rows() > 0 && (linear.coeff.cols() != num_vars_ || linear.constant.size() != linear.coeff.rows()))
        fail("linear rows have inconsistent shape");
    if (equalities.coeff.rows() > 0 && (equalities.coeff.cols() != num_vars_ || equalities.rhs.size() != equalities.coeff.rows()))
        fail("equality rows have inconsistent shape");
}

CMatrix ConicProgram::evaluate_lmi(int index, const RVector& x) const
{
    const auto& lmi = lmis.at(static_cast<std::size_t>(index));
    CMatrix f = lmi.constant;
    for (const auto& t : lmi.scalars)
        f += x(t.var) * t.coeff;
    for (const auto& t : lmi.congruences)
    {
        const auto& v = variables_[static_cast<std::size_t>(t.block)];
        const CMatrix xm = params_to_hermitian(x.segment(v.offset, v.size()), v.dim);
        f += t.scale * (t.lift * xm * t.lift.adjoint());
    }
    return hermitian_part(f);
}

RVector ConicProgram::evaluate_soc(int index, const RVector& x) const
{
    const auto& soc = socs.at(static_cast<std::size_t>(index));
    return soc.constant + soc.coeff * x;
}

RVector ConicProgram::evaluate_linear(const RVector& x) const
{
    if (linear.rows() == 0)
        return {};
    return linear.constant + linear.coeff * x;
}

RVector ConicProgram::evaluate_equalities(const RVector& x) const
{
    if (equalities.rows() == 0)
        return {};
    return equalities.coeff * x - equalities.rhs;
}

CMatrix ConicProgram::matrix_value(const std::string& name, const RVector& x) const
{
    const auto& v = variable(name);
    if (v.kind != VariableBlock::Kind::hermitian)
        throw std::invalid_argument("ConicProgram: '" + name + "' is not a matrix variable");
    return params_to_hermitian(x.segment(v.offset, v.size()), v.dim);
}

double ConicProgram::scalar_value(const std::string& name, const RVector& x) const
{
    return x(slot(name));
}

ConicProgram::Dimensions ConicProgram::dimensions() const
{
    Dimensions d;
    d.variables = num_vars_;
    d.lmi_blocks = static_cast<int>(lmis.size());
    for (const auto& l : lmis)
        d.lmi_total_side += l.dim;
    d.soc_blocks = static_cast<int>(socs.size());
    for (const auto& s : socs)
        d.soc_total_length += static_cast<int>(s.constant.size());
    d.linear_rows = linear.rows();
    d.equality_rows = equalities.rows();
    return d;
}

namespace
{

CMatrix realify_as_complex(const CMatrix& a)
{
    return realify_psd(HermitianMatrix(hermitian_part(a), 1.0)).cast<cplx>();
}

}  // namespace

ConicProgram realify_program(const ConicProgram& program, bool embed_soc)
{
    ConicProgram out;
    for (const auto& v : program.variables())
    {
        if (v.kind == VariableBlock::Kind::scalar)
            out.add_scalar(v.name);
        else
            out.add_hermitian(v.name, v.dim);
    }
    out.finalize_layout();
    out.maximize = program.maximize;
    out.objective = program.objective;

    for (const auto& lmi : program.lmis)
    {
        LmiConstraint r;
        r.name = lmi.name + ".realified";
        r.dim = 2 * lmi.dim;
        r.constant = realify_as_complex(lmi.constant);
        for (const auto& t : lmi.scalars)
            r.scalars.push_back({t.var, realify_as_complex(t.coeff)});
        for (const auto& t : lmi.congruences)
        {
            const auto& v = program.variables()[static_cast<std::size_t>(t.block)];
            for (int k = 0; k < v.size(); ++k)
            {
                const CMatrix term = t.scale * (t.lift * hermitian_basis(v.dim, k) * t.lift.adjoint());
                r.scalars.push_back({v.offset + k, realify_as_complex(term)});
            }
        }
        out.lmis.push_back(std::move(r));
    }

    for (const auto& soc : program.socs)
    {
        if (!embed_soc)
        {
            out.socs.push_back(soc);
            continue;
        }
        // [[u0, u1ᵀ], [u1, u0 I]] ⪰ 0  ⇔  u0 ≥ ‖u1‖
        const int m = static_cast<int>(soc.constant.size());
        const auto arrow = [m](const RVector& u) {
            CMatrix a = CMatrix::Zero(m, m);
            for (int i = 0; i < m; ++i)
                a(i, i) = u(0);
            for (int i = 1; i < m; ++i)
            {
                a(0, i) = u(i);
                a(i, 0) = u(i);
            }
            return a;
        };
        LmiConstraint r;
        r.name = soc.name + ".arrow";
        r.dim = m;
        r.constant = arrow(soc.constant);
        for (int j = 0; j < program.num_vars(); ++j)
        {
            const RVector col = soc.coeff.col(j);
            if (col.squaredNorm() == 0.0)
                continue;
            r.scalars.push_back({j, arrow(col)});
        }
        out.lmis.push_back(std::move(r));
    }

    out.linear = program.linear;
    out.equalities = program.equalities;
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json complex_matrix_json(const CMatrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
    {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix complex_matrix_from_json(const nlohmann::json& j)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        if (static_cast<Eigen::Index>(j.at(r).size()) != cols)
            throw std::invalid_argument("complex_matrix_from_json: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = cplx(j.at(r).at(c).at(0).get<double>(), j.at(r).at(c).at(1).get<double>());
    }
    return m;
}

namespace
{

nlohmann::json real_matrix_json(const RMatrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
    {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(row);
    }
    return rows;
}

RMatrix real_matrix_from_json(const nlohmann::json& j, Eigen::Index cols)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    RMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        const auto row = j.at(r).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument("conic_program_from_json: row length mismatch");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

std::vector<double> to_std(const RVector& v)
{
    return {v.data(), v.data() + v.size()};
}

RVector from_std(const std::vector<double>& v)
{
    return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const ConicProgram& program)
{
    nlohmann::json j;
    j["format"] = "rcc-conic-program";
    j["version"] = 1;
    j["sense"] = program.maximize ? "maximize" : "minimize";
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : program.variables())
    {
        vars.push_back({{"name", v.name},
                        {"kind", v.kind == VariableBlock::Kind::scalar ? "scalar" : "hermitian"},
                        {"dim", v.dim},
                        {"offset", v.offset}});
    }
    j["variables"] = vars;
    j["num_vars"] = program.num_vars();
    j["objective"] = to_std(program.objective);

    nlohmann::json lmis = nlohmann::json::array();
    for (const auto& lmi : program.lmis)
    {
        nlohmann::json l;
        l["name"] = lmi.name;
        l["dim"] = lmi.dim;
        l["constant"] = complex_matrix_json(lmi.constant);
        nlohmann::json scalars = nlohmann::json::array();
        for (const auto& t : lmi.scalars)
            scalars.push_back({{"slot", t.var}, {"coeff", complex_matrix_json(t.coeff)}});
        l["scalar_terms"] = scalars;
        nlohmann::json congr = nlohmann::json::array();
        for (const auto& t : lmi.congruences)
            congr.push_back({{"variable", program.variables()[static_cast<std::size_t>(t.block)].name},
                             {"scale", t.scale},
                             {"lift", complex_matrix_json(t.lift)}});
        l["congruence_terms"] = congr;
        lmis.push_back(std::move(l));
    }
    j["lmi"] = lmis;

    nlohmann::json socs = nlohmann::json::array();
    for (const auto& s : program.socs)
        socs.push_back({{"name", s.name}, {"constant", to_std(s.constant)}, {"coeff", real_matrix_json(s.coeff)}});
    j["soc"] = socs;

    j["linear"] = {{"names", program.linear.names},
                   {"constant", to_std(program.linear.constant)},
                   {"coeff", real_matrix_json(program.linear.coeff)}};
    j["equality"] = {{"names", program.equalities.names},
                     {"rhs", to_std(program.equalities.rhs)},
                     {"coeff", real_matrix_json(program.equalities.coeff)}};
    return j;
}

ConicProgram conic_program_from_json(const nlohmann::json& j)
{
    if (j.value("format", "") != "rcc-conic-program")
        throw std::invalid_argument("conic_program_from_json: not an rcc-conic-program document");
    ConicProgram p;
    for (const auto& v : j.at("variables"))
    {
        const auto kind = v.at("kind").get<std::string>();
        if (kind == "scalar")
            p.add_scalar(v.at("name").get<std::string>());
        else if (kind == "hermitian")
            p.add_hermitian(v.at("name").get<std::string>(), v.at("dim").get<int>());
        else
            throw std::invalid_argument("conic_program_from_json: unknown variable kind '" + kind + "'");
    }
    p.finalize_layout();
    p.maximize = j.at("sense").get<std::string>() == "maximize";
    p.objective = from_std(j.at("objective").get<std::vector<double>>());
    const Eigen::Index n = p.num_vars();

    for (const auto& l : j.at("lmi"))
    {
        LmiConstraint lmi;
        lmi.name = l.at("name").get<std::string>();
        lmi.dim = l.at("dim").get<int>();
        lmi.constant = complex_matrix_from_json(l.at("constant"));
        for (const auto& t : l.at("scalar_terms"))
            lmi.scalars.push_back({t.at("slot").get<int>(), complex_matrix_from_json(t.at("coeff"))});
        for (const auto& t : l.at("congruence_terms"))
        {
            const auto idx = p.find_variable(t.at("variable").get<std::string>());
            if (!idx)
                throw std::invalid_argument("conic_program_from_json: congruence on unknown variable");
            lmi.congruences.push_back({*idx, t.at("scale").get<double>(), complex_matrix_from_json(t.at("lift"))});
        }
        p.lmis.push_back(std::move(lmi));
    }
    for (const auto& s : j.at("soc"))
    {
        SocConstraint soc;
        soc.name = s.at("name").get<std::string>();
        soc.constant = from_std(s.at("constant").get<std::vector<double>>());
        soc.coeff = real_matrix_from_json(s.at("coeff"), n);
        p.socs.push_back(std::move(soc));
    }
    const auto& lin = j.at("linear");
    p.linear.names = lin.at("names").get<std::vector<std::string>>();
    p.linear.constant = from_std(lin.at("constant").get<std::vector<double>>());
    p.linear.coeff = real_matrix_from_json(lin.at("coeff"), n);
    const auto& eq = j.at("equality");
    p.equalities.names = eq.at("names").get<std::vector<std::string>>();
    p.equalities.rhs = from_std(eq.at("rhs").get<std::vector<double>>());
    p.equalities.coeff = real_matrix_from_json(eq.at("coeff"), n);
    p.validate();
    return p;
}

}  // namespace rcc
