#include "doctest.h"

#include "hypomix/errors.hpp"
#include "hypomix/model.hpp"

using namespace hypomix;

TEST_CASE("triad model passes every structural check") {
    const auto m = build_triad({1, 1, -2}, 1, 1, 0.1);
    const auto rep = check_structure(m);
    CHECK(rep.a_spd);
    CHECK(rep.b_skew);
    CHECK(rep.energy_conserving);
    CHECK(rep.divergence_free);
    CHECK(rep.homogeneous);
    CHECK(rep.degree_p == 2);
    CHECK(rep.all_pass());
    CHECK(m.lambda_min_A == doctest::Approx(1.0));
    CHECK(m.sum_z2 == doctest::Approx(2.0));
    CHECK(m.r() == 2);

    // drift = -eps A x - N(x) with N = (x2 x3, x1 x3, -2 x1 x2)
    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;
    const Eigen::VectorXd v = drift_eval(m, x);
    CHECK(v[0] == doctest::Approx(-0.1 * 1 - 6.0));
    CHECK(v[1] == doctest::Approx(-0.1 * 2 - 3.0));
    CHECK(v[2] == doctest::Approx(-0.1 * 3 + 4.0));
}

TEST_CASE("triad parameter validation") {
    CHECK_THROWS_AS(build_triad({1, -1, 1}, 1, 1, 0.1), ValidationError); // sum != 0
    CHECK_THROWS_AS(build_triad({1, -1, 0}, 1, 1, 0.1), ValidationError); // a3 == 0
    CHECK_THROWS_AS(build_triad({1, 1, -2}, 0, 1, 0.1), ValidationError); // dead noise
}

TEST_CASE("lorenz96 advection matches the hand-expanded stencil") {
    const auto m = build_lorenz96(4, {1, 1, 1, 1}, 0.05);
    CHECK(check_structure(m).all_pass());
    // N_m = -(u_{m+1} - u_{m-2}) u_{m-1} at u = (1,2,3,4), cyclically:
    //   N = (4, 1, -6, 3); drift = -eps u - N.
    Eigen::VectorXd u(4);
    u << 1.0, 2.0, 3.0, 4.0;
    const Eigen::VectorXd v = m.drift(u);
    CHECK(v[0] == doctest::Approx(-0.05 * 1 - 4.0));
    CHECK(v[1] == doctest::Approx(-0.05 * 2 - 1.0));
    CHECK(v[2] == doctest::Approx(-0.05 * 3 + 6.0));
    CHECK(v[3] == doctest::Approx(-0.05 * 4 - 3.0));
    CHECK_THROWS_AS(build_lorenz96(3, {1, 1, 1}, 0.1), ValidationError);

    const auto sparse = build_lorenz96(5, {1, 1, 0, 0, 0}, 0.1);
    CHECK(sparse.r() == 2); // zero forcing entries are dropped
    CHECK(check_structure(sparse).all_pass());
}

TEST_CASE("structure checks produce witnesses instead of exceptions") {
    ModelSpec m;
    m.d = 3;
    m.A = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    m.B = {{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}};
    m.N = PolyVectorField(3);
    m.N.add_term(0, {2, 0, 0}, 1); // x1^2 e1: breaks conservation and divergence
    m.Z = {{1, 0, 0}};
    m.finalize();
    const auto rep = check_structure(m);
    CHECK(rep.a_spd);
    CHECK(rep.b_skew);
    CHECK_FALSE(rep.energy_conserving);
    CHECK_FALSE(rep.divergence_free);
    CHECK_FALSE(rep.all_pass());
    CHECK_FALSE(rep.witness.empty());

    ModelSpec bad_a = m;
    bad_a.A = {{1, 1, 0}, {0, 1, 0}, {0, 0, -1}};
    bad_a.finalize();
    CHECK_FALSE(check_structure(bad_a).a_spd);

    ModelSpec bad_b = m;
    bad_b.B = {{0, 1, 0}, {1, 0, 0}, {0, 0, 0}};
    bad_b.finalize();
    CHECK_FALSE(check_structure(bad_b).b_skew);

    ModelSpec mixed = m;
    mixed.N = PolyVectorField(3);
    mixed.N.add_term(0, {0, 1, 1}, 1);
    mixed.N.add_term(1, {1, 1, 1}, 1);
    mixed.finalize();
    CHECK_FALSE(check_structure(mixed).homogeneous);
}

TEST_CASE("shell model conserves energy and hits the analytic point value") {
    const auto m = build_sabra(4, Rat(1) / 2, {1, 0, 0, 0}, {0, 1, 0, 0}, 0.1);
    const auto rep = check_structure(m);
    CHECK(rep.all_pass());
    CHECK(rep.degree_p == 2);
    CHECK(m.d == 8);
    CHECK(m.r() == 2);
    CHECK(m.A_f(0, 0) == doctest::Approx(4.0));
    CHECK(m.A_f(2, 2) == doctest::Approx(16.0));
    CHECK(m.A_f(7, 7) == doctest::Approx(256.0));

    // state a = (1,0,0,0), b = (0,1,0,0) interleaved; third-shell cosine
    // component of N equals 2 - 2*delta (= 1 at delta = 1/2), exactly.
    std::vector<Rat> x(8, 0);
    x[0] = 1; // a1
    x[3] = 1; // b2
    const auto n = m.N.eval_exact(x);
    CHECK(n[4] == Rat(1));

    const auto m3 = build_sabra(4, Rat(1) / 3, {1, 0, 0, 0}, {0, 1, 0, 0}, 0.1);
    CHECK(m3.N.eval_exact(x)[4] == Rat(4) / 3);

    CHECK_THROWS_AS(build_sabra(2, Rat(1) / 2, {1, 1}, {1, 1}, 0.1), ValidationError);
    CHECK_THROWS_AS(build_sabra(4, Rat(1), {1, 0, 0, 0}, {0, 1, 0, 0}, 0.1), ValidationError);
}

TEST_CASE("linear control model and derived scales") {
    const auto m = build_ou({1, 2}, {1, 1}, 0.1);
    CHECK(check_structure(m).all_pass());
    CHECK(m.N.is_zero());
    CHECK(m.degree_p == 0);
    CHECK(m.lambda_min_A == doctest::Approx(1.0));
    CHECK(m.lambda_max_A == doctest::Approx(2.0));
    CHECK(m.rms_radius() == doctest::Approx(std::sqrt(2.0)));
    Eigen::VectorXd x(2);
    x << 1.0, 1.0;
    const Eigen::VectorXd v = m.drift(x);
    CHECK(v[0] == doctest::Approx(-0.1));
    CHECK(v[1] == doctest::Approx(-0.2));
}

TEST_CASE("step bound reflects stiffness and the sampled nonlinear gain") {
    const auto m = build_triad({1, 1, -2}, 1, 1, 0.1);
    CHECK(m.N_op_norm == doctest::Approx(1.0).epsilon(0.02));
    CHECK(m.dt_max() > 0.008);
    CHECK(m.dt_max() < 0.009);

    const auto ou = build_ou({1, 1}, {1, 1}, 0.1);
    CHECK(ou.dt_max() == doctest::Approx(1.0)); // 0.1 / (0.1 * 1)
}

TEST_CASE("model hash tracks content") {
    const auto a = build_triad({1, 1, -2}, 1, 1, 0.1);
    const auto b = build_triad({1, 1, -2}, 1, 1, 0.1);
    CHECK(a.hash == b.hash);
    CHECK(a.hash != a.with_epsilon(0.2).hash);
    CHECK(a.hash != a.with_delta(0.5).hash);
    CHECK(a.hash != build_triad({1, 2, -3}, 1, 1, 0.1).hash);
}

TEST_CASE("model validation rejects out-of-range parameters") {
    CHECK_THROWS_AS(build_ou({1, 1}, {1, 1}, 0.0), ValidationError);  // eps out of (0,1]
    CHECK_THROWS_AS(build_ou({1, 1}, {1, 1}, 1.5), ValidationError);
    CHECK_THROWS_AS(build_ou({-1, 1}, {1, 1}, 0.1), ValidationError); // A not SPD
    auto m = build_ou({1, 1}, {1, 1}, 0.1);
    CHECK_THROWS_AS(m.with_delta(-0.1), ValidationError);
    CHECK_THROWS_AS(m.with_delta(1.5), ValidationError);
}
