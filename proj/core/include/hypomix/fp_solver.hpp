#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

#include "hypomix/fv.hpp"

namespace hypomix {

struct StationaryResult {
    Eigen::VectorXd f;     ///< nonnegative, sums to 1 against the cell volume
    double residual = 0.0; ///< |M f| / (|M| |f|)
    int iterations = 0;
    std::vector<double> residual_history;
};

/// Stationary density by inverse power iteration on the shifted operator
/// (M + s I). Fails with the residual history when the relative residual
/// stays above 1e-8.
StationaryResult stationary_solve(const DiscreteOperator& op, double tol = 1e-10,
                                  int max_iter = 80);

struct GapResult {
    double gap = 0.0; ///< -max Re lambda over the mass-zero spectrum near 0
    std::vector<std::complex<double>> eigenvalues; ///< converged, sorted by Re descending
    std::vector<double> ritz_residuals;            ///< relative, matching eigenvalues
    int arnoldi_dim = 0;
};

/// Spectral gap of the generator: shift-invert Arnoldi on the transpose
/// operator with the constant mode deflated against the stationary weights
/// f_hat h^d. The shift is sigma_scale * epsilon, placed between 0 and the
/// expected gap scale.
GapResult spectral_gap(const DiscreteOperator& op, const Eigen::VectorXd& f_hat,
                       double sigma_scale = 0.4, int krylov_dim = 50, double tol = 1e-8);

struct SemigroupResult {
    Eigen::MatrixXd f; ///< one evolved column per input column
    bool undershoot = false; ///< some value fell below -1e-10 * max input
    double mass_drift = 0.0; ///< worst relative mass change (forward runs)
};

/// Evolve columns of f0 to time t by Crank-Nicolson with a Rannacher start
/// (two implicit-Euler half steps). backward evolves observables with the
/// exact transpose instead of densities.
SemigroupResult semigroup_apply(const DiscreteOperator& op, const Eigen::MatrixXd& f0, double t,
                                int steps, bool backward = false);

/// Total-variation distance between the time-t laws started from the cells
/// containing x and y. steps = 0 picks 40 steps per unit of epsilon * t.
double tv_overlap(const DiscreteOperator& op, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  double t, int steps = 0);

/// Pairwise tv_overlap for a list of start cells, sharing one solve.
Eigen::MatrixXd tv_overlap_matrix(const DiscreteOperator& op, const std::vector<long>& nodes,
                                  double t, int steps = 0);

struct CollapseCurve {
    double epsilon = 0.0;
    std::vector<double> s;     ///< rescaled time grid, shared across epsilons
    std::vector<double> value; ///< D(s) = |P_{s/eps} g|_{L2(mu)} / |g|_inf
    bool monotone = true;      ///< nonincreasing along s
};

struct CollapseReport {
    std::vector<CollapseCurve> curves;
    double defect = 0.0; ///< max over epsilon pairs of sup_s |D_1 - D_2|
    std::vector<double> eval_s;
};

/// Decay curves of the centered observable f_obs under the backward
/// semigroup, one per operator, on a common rescaled-time grid s = eps * t
/// with a fixed step count per unit s (so the OU family collapses exactly).
CollapseReport collapse_check(const std::vector<DiscreteOperator>& ops,
                              const std::vector<Eigen::VectorXd>& f_hats,
                              const Eigen::VectorXd& f_obs, double s_max = 6.0,
                              int steps_per_unit_s = 40, double s_min = 0.1, int n_eval = 30);

struct ParRegResult {
    std::vector<double> ratios; ///< one per trial
    double max_ratio = 0.0;
};

/// Regularization diagnostic: random sign-valued observables evolved
/// backward to t = 1/eps; reports max |P_t f| over the half box against
/// |f|_{L2(mu)}.
ParRegResult parreg_diagnostic(const DiscreteOperator& op, const Eigen::VectorXd& f_hat,
                               int trials, std::uint64_t seed = 0x706172u, int steps = 200);

struct DeltaLimitRow {
    double delta = 0.0;
    double l1_gap = 0.0; ///< |f_delta - f_0|_{L1}
};

struct DeltaLimitReport {
    std::vector<DeltaLimitRow> rows;
    bool strictly_decreasing = false;
};

/// L1 convergence table of the regularized stationary densities toward the
/// delta = 0 solution. All operators are assembled pure-upwind so the
/// leading discretization bias cancels in the differences. delta_list must
/// be strictly decreasing and end at 0.
DeltaLimitReport delta_limit_check(const ModelSpec& model, const GridSpec& grid,
                                   const std::vector<double>& delta_list);

} // namespace hypomix
