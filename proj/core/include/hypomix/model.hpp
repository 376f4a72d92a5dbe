#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hypomix/poly.hpp"

namespace hypomix {

/// Outcome of the exact structural checks; failures carry a witness term.
struct StructureReport {
    bool a_spd = false;            ///< A symmetric positive definite (exact)
    bool b_skew = false;           ///< B^T = -B (exact)
    bool energy_conserving = false;///< N(x).x == 0 as a polynomial
    bool divergence_free = false;  ///< div N == 0 as a polynomial
    bool homogeneous = false;      ///< all terms of N share one total degree
    int degree_p = 0;              ///< that degree (0 for N == 0)
    std::string witness;           ///< first offending entry/monomial on failure

    bool all_pass() const {
        return a_spd && b_skew && energy_conserving && divergence_free && homogeneous;
    }
};

/// Complete instance of the SDE
///   dx = -eps A x dt - eps^alpha B x dt - N(x) dt
///        + sqrt(2 eps) sum_j Z_j dW_j + sqrt(2 eps delta) dW~.
///
/// Exact data (A, B, N, Z) drives the symbolic checks; finalize() derives
/// the float caches used by simulation and PDE code. Treat instances as
/// immutable after finalize(); the with_* helpers produce modified copies.
struct ModelSpec {
    int d = 0;
    std::vector<std::vector<Rat>> A; ///< d x d, exact
    std::vector<std::vector<Rat>> B; ///< d x d, exact
    PolyVectorField N;               ///< homogeneous nonlinearity
    std::vector<std::vector<Rat>> Z; ///< r constant noise vectors
    double alpha = 1.0;
    double epsilon = 0.1;
    double delta = 0.0;
    std::string label;

    // float caches, valid after finalize()
    Eigen::MatrixXd A_f, B_f;
    Eigen::MatrixXd Z_f;             ///< d x r (column j = Z_j)
    double lambda_min_A = 0.0;
    double lambda_max_A = 0.0;
    double B_norm = 0.0;             ///< spectral norm of B
    double N_op_norm = 0.0;          ///< sampled sup over |x|=1 of |N(x)|
    double sum_z2 = 0.0;             ///< sum_j |Z_j|^2
    int degree_p = 0;
    std::uint64_t hash = 0;          ///< content hash of the canonical text form

    int r() const { return static_cast<int>(Z.size()); }

    /// Populate caches and hash; throws ValidationError on malformed data.
    void finalize();

    /// Float drift -eps A x - eps^alpha B x - N(x).
    Eigen::VectorXd drift(const Eigen::VectorXd& x) const;

    /// Exact linear fields x -> Ax and x -> Bx.
    PolyVectorField linear_A() const { return PolyVectorField::linear(A); }
    PolyVectorField linear_B() const { return PolyVectorField::linear(B); }

    /// Bracket-generator drift N + eps1 Ax + eps2 Bx with exact weights.
    PolyVectorField bracket_drift(const Rat& eps1, const Rat& eps2) const;

    ModelSpec with_epsilon(double e) const;
    ModelSpec with_delta(double dl) const;

    /// sqrt(sum_j |Z_j|^2 / lambda_min(A)): the stationary RMS radius scale
    /// (exact for OU with A = a I; used as the default box/grid scale).
    double rms_radius() const;

    /// A-priori radius used in the step-size bound, 4x the RMS radius.
    double r_bound() const;

    /// Largest step size accepted by run_ensemble:
    /// 0.1 / (eps lmax(A) + eps^alpha |B| + p |N| r_bound^(p-1)).
    double dt_max() const;
};

/// Exact structural verification (Cholesky in rational arithmetic, symbolic
/// polynomial identities). Failures are report entries, never exceptions.
StructureReport check_structure(const ModelSpec& m);

/// Float drift evaluation with dimension checking.
Eigen::VectorXd drift_eval(const ModelSpec& m, const Eigen::VectorXd& x);

/// The constant fields Z_j as exact polynomial fields (bracket generators).
std::vector<PolyVectorField> noise_fields(const ModelSpec& m);

/// Cyclic-lattice model with N_m(u) = -(u_{m+1} - u_{m-2}) u_{m-1}, A = I,
/// B = 0 and Z_m = q_m e_m (zero q entries dropped).
ModelSpec build_lorenz96(int n, const std::vector<Rat>& q, double epsilon, double alpha = 1.0);

/// Real form of the dyadic shell model on R^(2J), coordinates interleaved as
/// (a_1, b_1, ..., a_J, b_J), A = diag(4^m, 4^m), noise q_m on a_m and p_m
/// on b_m. delta_param in (0,2) \ {1}.
ModelSpec build_sabra(int J, const Rat& delta_param, const std::vector<Rat>& q,
                      const std::vector<Rat>& p, double epsilon, double alpha = 1.0);

/// Three-mode system N(x) = (a1 x2 x3, a2 x1 x3, a3 x1 x2) with sum a_i = 0,
/// A = I, noise on the first two coordinates.
ModelSpec build_triad(const std::vector<Rat>& alphas, const Rat& q1, const Rat& q2,
                      double epsilon, double alpha = 1.0);

/// Linear control model: A = diag(a), B = 0, N = 0, Z_j = z_j e_j
/// (zero entries dropped). Closed-form reference for every estimator.
ModelSpec build_ou(const std::vector<Rat>& a_diag, const std::vector<Rat>& z,
                   double epsilon, double alpha = 1.0, double delta = 0.0);

} // namespace hypomix
