#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypomix/rational.hpp"

namespace hypomix {

/// Exponent multi-index; length equals the ambient dimension.
using Monomial = std::vector<int>;

/// Scalar polynomial in canonical sparse form (no zero coefficients stored).
using Poly = std::map<Monomial, Rat>;

/// poly += coeff * x^mono, erasing the term on exact cancellation.
void poly_add_term(Poly& p, const Monomial& mono, const Rat& coeff);

Poly poly_mul(const Poly& a, const Poly& b);

/// Partial derivative with respect to coordinate k.
Poly poly_derivative(const Poly& p, int k);

double poly_eval(const Poly& p, const Eigen::VectorXd& x);

Rat poly_eval_exact(const Poly& p, const std::vector<Rat>& x);

int poly_total_degree(const Monomial& m);

std::string poly_to_string(const Poly& p);

/// Exact sparse polynomial vector field on R^dim.
///
/// Components are maps from exponent multi-index to rational coefficient;
/// the map ordering gives a canonical form, so equality is decidable.
class PolyVectorField {
public:
    PolyVectorField() = default;
    explicit PolyVectorField(int dim) : dim_(dim), comp_(dim) {}

    int dim() const { return dim_; }
    bool is_zero() const;

    const Poly& component(int i) const { return comp_.at(i); }

    /// component(i) += coeff * x^mono.
    void add_term(int i, const Monomial& mono, const Rat& coeff);

    PolyVectorField operator+(const PolyVectorField& o) const;
    PolyVectorField operator-(const PolyVectorField& o) const;
    PolyVectorField scaled(const Rat& c) const;
    bool operator==(const PolyVectorField& o) const { return dim_ == o.dim_ && comp_ == o.comp_; }

    /// Float evaluation by direct monomial summation (no Horner regrouping,
    /// keeping the error model proportional to (1+|x|)^(deg+1)).
    Eigen::VectorXd eval(const Eigen::VectorXd& x) const;

    std::vector<Rat> eval_exact(const std::vector<Rat>& x) const;

    /// x . F(x) as an exact scalar polynomial.
    Poly dot_x() const;

    /// sum_i dF_i/dx_i as an exact scalar polynomial.
    Poly divergence() const;

    /// Max total degree over all stored terms; -1 for the zero field.
    int degree() const;

    /// Common total degree if every term shares one (zero field reports 0);
    /// nullopt when components mix degrees.
    std::optional<int> homogeneous_degree() const;

    /// If *this == c * other for a single rational c != 0, return c.
    std::optional<Rat> scalar_multiple_of(const PolyVectorField& other) const;

    /// Human-readable form like "(x2*x3, x1*x3, -2 x1*x2)".
    std::string to_string() const;

    /// Constant field with the given components.
    static PolyVectorField constant(const std::vector<Rat>& c);

    /// Linear field x -> M x from exact matrix rows.
    static PolyVectorField linear(const std::vector<std::vector<Rat>>& M);

    /// Standard basis field e_j.
    static PolyVectorField basis(int dim, int j);

private:
    int dim_ = 0;
    std::vector<Poly> comp_;
};

/// Lie bracket [X, Y] = (DY) X - (DX) Y with exact coefficients.
PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y);

} // namespace hypomix
