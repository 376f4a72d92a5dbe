#include "doctest.h"

#include <cmath>

#include "hypomix/bracket.hpp"
#include "hypomix/lyapunov.hpp"
#include "hypomix/model.hpp"
#include "hypomix/spanning.hpp"

using namespace hypomix;

TEST_CASE("triad filtration structure") {
    const auto m = build_triad({1, 1, -2}, 1, 1, 0.1);
    const auto filt = generate_filtration(m.bracket_drift(1, 1), noise_fields(m));
    REQUIRE(filt.dim == 3);
    REQUIRE(filt.levels.size() >= 3);
    CHECK(filt.levels[0].size() == 2); // the two constant noise directions
    // level 1 holds the drift brackets [X0, Z_j]
    CHECK(filt.levels[1].size() == 2);
    for (const auto& f : filt.levels[1]) {
        REQUIRE(f.index.size() == 2);
        CHECK(f.index[0] == 0);
        CHECK(f.depth == 1);
    }
    // zero fields and exact scalar multiples are gone at level 2
    for (const auto& f : filt.levels[2]) CHECK_FALSE(f.F.is_zero());
}

TEST_CASE("triad spanning certificate is exact at the origin frame") {
    const auto m = build_triad({1, 1, -2}, 1, 1, 0.1);
    const auto cert = assumption2_check(m, 2.0);
    CHECK(cert.level_n0 == 2);
    CHECK(cert.min_abs_det == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cert.c0 == doctest::Approx(0.5).epsilon(1e-12)); // 1 / |alpha3|
    CHECK(cert.identical_across_eps);
    CHECK(cert.epsilon_pairs.size() == 9);
    CHECK(cert.grid_points == 9);
    CHECK(cert.model_label == "triad");
    REQUIRE(cert.frame.size() == 3);
    CHECK(cert.frame[0] == std::vector<int>{1});
    CHECK(cert.frame[1] == std::vector<int>{2});
    // the spanning direction comes from a depth-2 bracket through the drift
    CHECK(cert.frame[2].size() == 3);
}

TEST_CASE("degenerate forcing fails with rank 0") {
    const auto m = build_triad({1, 1, -2}, 1, 1, 0.1);
    ModelSpec dead = m;
    dead.Z.clear();
    dead.finalize();
    const auto filt = generate_filtration(dead.bracket_drift(1, 1), noise_fields(dead));
    const auto res = spanning_check(filt, 2.0, 5);
    REQUIRE_FALSE(res.ok());
    CHECK(res.failure->achieved_rank == 0);
    CHECK(res.failure->node.norm() == doctest::Approx(0.0));
}

TEST_CASE("elliptic forcing spans at level zero") {
    const auto m = build_ou({1, 2}, {1, 2}, 0.1);
    const auto cert = assumption2_check(m, 2.0);
    CHECK(cert.level_n0 == 0);
    CHECK(cert.min_abs_det == doctest::Approx(2.0).epsilon(1e-12)); // |z1 z2|
    CHECK(cert.identical_across_eps);
    REQUIRE(cert.frame.size() == 2);
    CHECK(cert.frame[0] == std::vector<int>{1});
    CHECK(cert.frame[1] == std::vector<int>{2});
}

TEST_CASE("sparse lattice forcing still spans through deep brackets") {
    const auto m = build_lorenz96(5, {1, 1, 0, 0, 0}, 0.1);
    const auto filt = generate_filtration(m.bracket_drift(1, 0), noise_fields(m));
    const auto res = spanning_check(filt, 2.0, 5);
    REQUIRE(res.ok());
    CHECK(res.certificate->level_n0 >= 1);
    CHECK(res.certificate->c0 > 0.0);
    CHECK(res.certificate->min_abs_det > 0.0);
    CHECK(res.certificate->frame.size() == 5);
}

TEST_CASE("energy drift certificate for the linear control model") {
    const auto m = build_ou({1, 1}, {1, 1}, 0.1);
    const double R = 3.0 * m.rms_radius();
    const auto cert = lyapunov_certificate(m, R, 21);
    CHECK(cert.gamma == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(cert.kappa == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
    CHECK(cert.b > cert.kappa);
    CHECK(cert.verified_on_grid);
    CHECK(cert.asymptotic_ok);
    CHECK(cert.sup_radius < cert.grid_radius);

    // a much finer grid may only exceed the certified sup by grid bias
    const double viol = lyapunov_violation(m, cert, R, 201, 1.0, 1.0);
    CHECK(viol <= 0.05 * (cert.kappa + cert.b));
}

TEST_CASE("energy drift certificate for the quadratic models") {
    for (const auto& m : {build_triad({1, 1, -2}, 1, 1, 0.1),
                          build_lorenz96(5, {1, 1, 0, 0, 0}, 0.1)}) {
        const double R = 3.0 * m.rms_radius();
        const auto cert = lyapunov_certificate(m, R, 15);
        CHECK(cert.gamma > 0.0);
        CHECK(cert.kappa > 0.0);
        CHECK(cert.b > 0.0);
        CHECK(cert.verified_on_grid);
        CHECK(cert.asymptotic_ok);
        // constants do not depend on eps or delta
        const auto cert2 = lyapunov_certificate(m.with_epsilon(0.01).with_delta(1.0), R, 15);
        CHECK(cert2.gamma == cert.gamma);
        CHECK(cert2.kappa == cert.kappa);
        CHECK(cert2.b == cert.b);
    }
}

TEST_CASE("certificate json round-trips the key constants") {
    const auto m = build_triad({1, 1, -2}, 1, 1, 0.1);
    const auto cert = assumption2_check(m, 2.0);
    const std::string js = certificate_to_json(cert);
    CHECK(js.find("\"c0\"") != std::string::npos);
    CHECK(js.find("\"level_n0\": 2") != std::string::npos);
    CHECK(js.find("triad") != std::string::npos);
}
