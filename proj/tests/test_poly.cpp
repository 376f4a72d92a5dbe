#include "doctest.h"

#include "hypomix/poly.hpp"

using namespace hypomix;

namespace {

struct Term {
    int comp;
    Monomial mono;
    Rat coeff;
};

PolyVectorField field3(std::initializer_list<Term> terms) {
    PolyVectorField f(3);
    for (const auto& t : terms) f.add_term(t.comp, t.mono, t.coeff);
    return f;
}

} // namespace

TEST_CASE("scalar polynomial arithmetic is exact") {
    Poly p;
    poly_add_term(p, {1, 0, 0}, Rat(1) / 2);
    poly_add_term(p, {1, 0, 0}, Rat(-1) / 2);
    CHECK(p.empty()); // exact cancellation removes the term

    Poly x, y;
    poly_add_term(x, {1, 0}, 1);
    poly_add_term(y, {0, 1}, 1);
    Poly s = x;
    poly_add_term(s, {0, 1}, 1);
    const Poly sq = poly_mul(s, s);
    CHECK(sq.size() == 3);
    CHECK(sq.at({2, 0}) == 1);
    CHECK(sq.at({1, 1}) == 2);
    CHECK(sq.at({0, 2}) == 1);

    const Poly dx = poly_derivative(sq, 0);
    CHECK(dx.at({1, 0}) == 2);
    CHECK(dx.at({0, 1}) == 2);

    Eigen::VectorXd v(2);
    v << 2.0, 3.0;
    CHECK(poly_eval(sq, v) == doctest::Approx(25.0).epsilon(1e-15));

    Poly q;
    poly_add_term(q, {1}, Rat(1) / 2);
    poly_add_term(q, {0}, Rat(1) / 3);
    CHECK(poly_eval_exact(q, {Rat(1) / 5}) == Rat(13) / 30);
}

TEST_CASE("vector field identities") {
    const auto F = field3({{0, {0, 1, 1}, 1}, {1, {1, 0, 1}, 1}, {2, {1, 1, 0}, -2}});
    CHECK(F.dot_x().empty());
    CHECK(F.divergence().empty());
    CHECK(F.homogeneous_degree() == 2);
    CHECK(F.degree() == 2);

    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;
    const Eigen::VectorXd v = F.eval(x);
    CHECK(v[0] == doctest::Approx(6.0));
    CHECK(v[1] == doctest::Approx(3.0));
    CHECK(v[2] == doctest::Approx(-4.0));

    const auto G = F.scaled(Rat(3) / 7);
    REQUIRE(G.scalar_multiple_of(F).has_value());
    CHECK(*G.scalar_multiple_of(F) == Rat(3) / 7);
    CHECK(*F.scalar_multiple_of(G) == Rat(7) / 3);

    const auto H = field3({{0, {2, 0, 0}, 1}});
    CHECK_FALSE(H.scalar_multiple_of(F).has_value());
    CHECK_FALSE(H.dot_x().empty());
    CHECK(H.homogeneous_degree() == 2);

    const auto mixed = field3({{0, {2, 0, 0}, 1}, {1, {1, 1, 1}, 1}});
    CHECK_FALSE(mixed.homogeneous_degree().has_value());

    const PolyVectorField zero(3);
    CHECK(zero.is_zero());
    CHECK(zero.degree() == -1);
    CHECK(zero.homogeneous_degree() == 0);
}

TEST_CASE("lie bracket: antisymmetry, bilinearity, Jacobi (exact)") {
    const auto X = field3({{0, {0, 2, 0}, 1}, {1, {0, 0, 1}, 1}, {2, {1, 1, 0}, 1}});
    const auto Y = field3({{0, {0, 0, 0}, 1}, {1, {1, 0, 0}, 1}, {2, {0, 1, 1}, 1}});
    const auto Z = field3({{0, {0, 0, 1}, 1}, {1, {2, 0, 0}, 1}, {2, {0, 0, 0}, 2}});

    CHECK((lie_bracket(X, Y) + lie_bracket(Y, X)).is_zero());
    CHECK((lie_bracket(X, Y + Z) - lie_bracket(X, Y) - lie_bracket(X, Z)).is_zero());

    const auto jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
                     lie_bracket(Z, lie_bracket(X, Y));
    CHECK(jac.is_zero());
}

TEST_CASE("lie bracket of linear fields is the commutator") {
    const std::vector<std::vector<Rat>> Am = {{0, 1}, {-1, 0}};
    const std::vector<std::vector<Rat>> Bm = {{1, 0}, {0, 2}};
    const auto FA = PolyVectorField::linear(Am);
    const auto FB = PolyVectorField::linear(Bm);
    // [Ax, Bx] = (BA - AB) x
    std::vector<std::vector<Rat>> Cm(2, std::vector<Rat>(2, 0));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) Cm[i][j] += Bm[i][k] * Am[k][j] - Am[i][k] * Bm[k][j];
    CHECK(lie_bracket(FA, FB) == PolyVectorField::linear(Cm));
}

TEST_CASE("bracket of constant with quadratic lowers degree") {
    const auto N = field3({{0, {0, 1, 1}, 1}, {1, {1, 0, 1}, 1}, {2, {1, 1, 0}, -2}});
    const auto E1 = PolyVectorField::basis(3, 0);
    const auto B1 = lie_bracket(E1, N); // (DN) e1
    CHECK(B1.degree() == 1);
    const auto B2 = lie_bracket(PolyVectorField::basis(3, 1), B1);
    CHECK(B2.degree() == 0);
    Eigen::VectorXd at0 = B2.eval(Eigen::VectorXd::Zero(3));
    CHECK(at0[2] == doctest::Approx(-2.0)); // alpha3 survives in e3
}
