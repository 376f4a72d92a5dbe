#include "hypomix/poly.hpp"

#include <cmath>
#include <sstream>

#include "hypomix/errors.hpp"

namespace hypomix {

void poly_add_term(Poly& p, const Monomial& mono, const Rat& coeff) {
    if (coeff == 0) return;
    auto it = p.find(mono);
    if (it == p.end()) {
        p.emplace(mono, coeff);
    } else {
        it->second += coeff;
        if (it->second == 0) p.erase(it);
    }
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a) {
        for (const auto& [mb, cb] : b) {
            Monomial m(ma.size());
            for (size_t k = 0; k < ma.size(); ++k) m[k] = ma[k] + mb[k];
            poly_add_term(out, m, ca * cb);
        }
    }
    return out;
}

Poly poly_derivative(const Poly& p, int k) {
    Poly out;
    for (const auto& [m, c] : p) {
        if (m[k] == 0) continue;
        Monomial dm = m;
        dm[k] -= 1;
        poly_add_term(out, dm, c * m[k]);
    }
    return out;
}

double poly_eval(const Poly& p, const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (const auto& [m, c] : p) {
        double term = to_double(c);
        for (size_t k = 0; k < m.size(); ++k)
            for (int e = 0; e < m[k]; ++e) term *= x[static_cast<Eigen::Index>(k)];
        acc += term;
    }
    return acc;
}

Rat poly_eval_exact(const Poly& p, const std::vector<Rat>& x) {
    Rat acc = 0;
    for (const auto& [m, c] : p) {
        Rat term = c;
        for (size_t k = 0; k < m.size(); ++k)
            for (int e = 0; e < m[k]; ++e) term *= x[k];
        acc += term;
    }
    return acc;
}

int poly_total_degree(const Monomial& m) {
    int s = 0;
    for (int e : m) s += e;
    return s;
}

std::string poly_to_string(const Poly& p) {
    if (p.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : p) {
        if (!first) os << " + ";
        first = false;
        os << rat_to_string(c);
        for (size_t k = 0; k < m.size(); ++k) {
            if (m[k] == 0) continue;
            os << " x" << (k + 1);
            if (m[k] > 1) os << "^" << m[k];
        }
    }
    return os.str();
}

bool PolyVectorField::is_zero() const {
    for (const auto& c : comp_)
        if (!c.empty()) return false;
    return true;
}

void PolyVectorField::add_term(int i, const Monomial& mono, const Rat& coeff) {
    if (i < 0 || i >= dim_) throw DimensionError("component index out of range");
    if (static_cast<int>(mono.size()) != dim_) throw DimensionError("monomial length != dim");
    poly_add_term(comp_[i], mono, coeff);
}

PolyVectorField PolyVectorField::operator+(const PolyVectorField& o) const {
    if (dim_ != o.dim_) throw DimensionError("field dims differ in +");
    PolyVectorField out = *this;
    for (int i = 0; i < dim_; ++i)
        for (const auto& [m, c] : o.comp_[i]) poly_add_term(out.comp_[i], m, c);
    return out;
}

PolyVectorField PolyVectorField::operator-(const PolyVectorField& o) const {
    if (dim_ != o.dim_) throw DimensionError("field dims differ in -");
    PolyVectorField out = *this;
    for (int i = 0; i < dim_; ++i)
        for (const auto& [m, c] : o.comp_[i]) poly_add_term(out.comp_[i], m, -c);
    return out;
}

PolyVectorField PolyVectorField::scaled(const Rat& c) const {
    PolyVectorField out(dim_);
    if (c == 0) return out;
    for (int i = 0; i < dim_; ++i)
        for (const auto& [m, a] : comp_[i]) out.comp_[i].emplace(m, a * c);
    return out;
}

Eigen::VectorXd PolyVectorField::eval(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw DimensionError("eval point dim != field dim");
    Eigen::VectorXd out(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = poly_eval(comp_[i], x);
    return out;
}

std::vector<Rat> PolyVectorField::eval_exact(const std::vector<Rat>& x) const {
    if (static_cast<int>(x.size()) != dim_) throw DimensionError("eval point dim != field dim");
    std::vector<Rat> out(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = poly_eval_exact(comp_[i], x);
    return out;
}

Poly PolyVectorField::dot_x() const {
    Poly out;
    for (int i = 0; i < dim_; ++i) {
        for (const auto& [m, c] : comp_[i]) {
            Monomial mm = m;
            mm[i] += 1;
            poly_add_term(out, mm, c);
        }
    }
    return out;
}

Poly PolyVectorField::divergence() const {
    Poly out;
    for (int i = 0; i < dim_; ++i) {
        Poly di = poly_derivative(comp_[i], i);
        for (const auto& [m, c] : di) poly_add_term(out, m, c);
    }
    return out;
}

int PolyVectorField::degree() const {
    int deg = -1;
    for (const auto& comp : comp_)
        for (const auto& [m, c] : comp) deg = std::max(deg, poly_total_degree(m));
    return deg;
}

std::optional<int> PolyVectorField::homogeneous_degree() const {
    int deg = -1;
    for (const auto& comp : comp_) {
        for (const auto& [m, c] : comp) {
            int d = poly_total_degree(m);
            if (deg == -1) deg = d;
            else if (d != deg) return std::nullopt;
        }
    }
    return deg == -1 ? 0 : deg;
}

std::optional<Rat> PolyVectorField::scalar_multiple_of(const PolyVectorField& other) const {
    if (dim_ != other.dim_ || is_zero() || other.is_zero()) return std::nullopt;
    std::optional<Rat> ratio;
    for (int i = 0; i < dim_; ++i) {
        if (comp_[i].size() != other.comp_[i].size()) return std::nullopt;
        auto it = comp_[i].begin();
        auto jt = other.comp_[i].begin();
        for (; it != comp_[i].end(); ++it, ++jt) {
            if (it->first != jt->first) return std::nullopt;
            Rat r = it->second / jt->second;
            if (!ratio) ratio = r;
            else if (*ratio != r) return std::nullopt;
        }
    }
    return ratio;
}

std::string PolyVectorField::to_string() const {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < dim_; ++i) {
        if (i) os << ", ";
        os << poly_to_string(comp_[i]);
    }
    os << ")";
    return os.str();
}

PolyVectorField PolyVectorField::constant(const std::vector<Rat>& c) {
    PolyVectorField out(static_cast<int>(c.size()));
    Monomial zero(c.size(), 0);
    for (size_t i = 0; i < c.size(); ++i)
        if (c[i] != 0) out.comp_[i].emplace(zero, c[i]);
    return out;
}

PolyVectorField PolyVectorField::linear(const std::vector<std::vector<Rat>>& M) {
    int d = static_cast<int>(M.size());
    PolyVectorField out(d);
    for (int i = 0; i < d; ++i) {
        if (static_cast<int>(M[i].size()) != d) throw DimensionError("linear: matrix not square");
        for (int j = 0; j < d; ++j) {
            if (M[i][j] == 0) continue;
            Monomial m(d, 0);
            m[j] = 1;
            out.comp_[i].emplace(m, M[i][j]);
        }
    }
    return out;
}

PolyVectorField PolyVectorField::basis(int dim, int j) {
    PolyVectorField out(dim);
    out.add_term(j, Monomial(dim, 0), Rat(1));
    return out;
}

PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y) {
    if (X.dim() != Y.dim()) throw DimensionError("lie_bracket: dims differ");
    const int d = X.dim();
    PolyVectorField out(d);
    for (int i = 0; i < d; ++i) {
        Poly acc;
        for (int j = 0; j < d; ++j) {
            // (DY)X term: dY_i/dx_j * X_j
            Poly dy = poly_derivative(Y.component(i), j);
            if (!dy.empty() && !X.component(j).empty())
                for (const auto& [m, c] : poly_mul(dy, X.component(j))) poly_add_term(acc, m, c);
            // (DX)Y term: dX_i/dx_j * Y_j
            Poly dx = poly_derivative(X.component(i), j);
            if (!dx.empty() && !Y.component(j).empty())
                for (const auto& [m, c] : poly_mul(dx, Y.component(j))) poly_add_term(acc, m, -c);
        }
        for (const auto& [m, c] : acc) out.add_term(i, m, c);
    }
    return out;
}

} // namespace hypomix
