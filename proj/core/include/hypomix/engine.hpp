#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hypomix/lyapunov.hpp"
#include "hypomix/model.hpp"

namespace hypomix {

/// Ensemble run parameters. Trajectories start at initial_point (origin
/// when empty) unless initial_states has n_traj rows, in which case row i
/// restarts trajectory i from a prior run's endpoint.
struct SimConfig {
    double dt = 0.0;
    double t_final = 0.0;
    long n_traj = 1;
    std::uint64_t master_seed = 0;
    double burn_in = 0.0;      ///< window start for stationary averages
    int record_stride = 1;     ///< observables recorded every this many steps
    double gamma_exp = 0.0;    ///< exponential-moment weight; 0 disables
    Eigen::VectorXd initial_point;
    Eigen::MatrixXd initial_states;
    int block_width = 64;      ///< trajectories stepped together
};

/// Ensemble observables, one entry per record time. Means and standard
/// errors are over the trajectories still alive at that record; exploded
/// trajectories stop contributing from the record that caught them.
struct EnsembleRun {
    std::vector<double> times;
    std::vector<double> mean_energy, se_energy; ///< |x|^2
    std::vector<double> mean_quad, se_quad;     ///< Ax . x
    std::vector<double> exp_moment, se_exp;     ///< e^{gamma |x|^2} when enabled
    std::vector<long> alive;
    Eigen::MatrixXd endpoints;                  ///< n_traj x d, exploded rows zeroed
    std::vector<long> exploded;                 ///< trajectory ids
    long clip_count = 0;                        ///< exponential-moment clips at e^700
    long n_steps = 0;
    std::uint64_t model_hash = 0;
    SimConfig config;

    double explosion_fraction() const {
        return config.n_traj > 0
                   ? static_cast<double>(exploded.size()) / static_cast<double>(config.n_traj)
                   : 0.0;
    }
    /// Indices of records with t >= burn_in.
    std::vector<std::size_t> window_records() const;
};

/// Per-record view of one trajectory block, passed to the record hook on
/// a worker thread. x is lane major: x[i * width + lane] is coordinate i
/// of trajectory traj_base + lane. Hooks that accumulate floats must
/// store per-block partials and combine them in block order afterwards;
/// integer tallies may be merged per worker.
struct RecordBatch {
    long block_index = 0;
    int worker = 0;
    long traj_base = 0;
    int width = 0;
    int dim = 0;
    long record_index = 0;
    double t = 0.0;
    const double* x = nullptr;
    const std::uint8_t* alive = nullptr;
};
using RecordHook = std::function<void(const RecordBatch&)>;

/// One Euler-Maruyama step. gaussians holds r draws for the forcing
/// directions followed by d draws for the isotropic delta noise (the
/// tail is read only when delta > 0).
Eigen::VectorXd step_em(const ModelSpec& m, const Eigen::VectorXd& x, double dt,
                        const Eigen::VectorXd& gaussians);

/// Integrate n_traj trajectories; trajectory i draws from the stream
/// keyed (master_seed, i), so the result is a pure function of
/// (model, config) regardless of worker count.
EnsembleRun run_ensemble(const ModelSpec& m, const SimConfig& cfg,
                         const RecordHook& hook = RecordHook());

struct BalanceResult {
    double residual = 0.0;    ///< |window mean of Ax.x - target| / target
    double stderr_est = 0.0;  ///< batch-means error of the window mean, relative
    double target = 0.0;      ///< sum of |Z_j|^2
    double window_mean = 0.0;
};

/// Stationary energy balance: the time average of Ax.x past burn_in
/// against the exact injection target.
BalanceResult energy_balance_residual(const EnsembleRun& run, const ModelSpec& m);

struct RelaxationEntry {
    double epsilon = 0.0;
    double tau = 0.0;
    bool censored = false; ///< threshold not reached within t_final
    double plateau = 0.0;
};

struct RelaxationResult {
    std::vector<RelaxationEntry> entries;
    std::optional<double> slope;     ///< of log tau vs log epsilon
    std::optional<double> intercept;
};

/// First time the mean energy from an origin start reaches 1 - 1/e of
/// its plateau (mean over the last fifth of the run), per epsilon. The
/// template's dt (0 = automatic), t_final and burn_in are in units of
/// 1/epsilon; records and trajectory counts are taken as given.
RelaxationResult relaxation_time(const ModelSpec& m, const std::vector<double>& epsilons,
                                 const SimConfig& per_unit_template);

struct MomentDecayReport {
    bool pass = false;
    double worst_margin = 0.0; ///< min over records of bound - estimate
    bool clipped = false;
    std::vector<double> times, values, bounds, stderrs;
};

/// Check E e^{gamma |x_t|^2} <= b/kappa + e^{-eps kappa t} V(x_0) at
/// every record, with a five-standard-error allowance.
MomentDecayReport moment_decay_check(const ModelSpec& m, const SimConfig& cfg,
                                     const LyapunovCertificate& cert);

} // namespace hypomix
