#include "hypomix/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "hypomix/errors.hpp"
#include "hypomix/parallel.hpp"
#include "hypomix/rng.hpp"
#include "hypomix/stats.hpp"

namespace hypomix {

namespace {

constexpr double kExplosionEnergy = 1e12;
constexpr double kExpClip = 700.0; ///< exponent cap for the V accumulator
constexpr int kStepsPerChunk = 128;
constexpr int kLaneTile = 8; ///< lanes whose draws are transposed together

/// Flattened model for the lane-parallel stepping loops.
struct Kernel {
    int d = 0;
    int r = 0;
    int dps = 0; ///< gaussians per step: r + (delta > 0 ? d : 0)
    double eps = 0.0, delta = 0.0;
    struct NTerm {
        int comp = 0;
        double coeff = 0.0; ///< already negated: drift adds -N
        int nv = 0;
        std::array<int, 6> v{};
    };
    std::vector<NTerm> terms;
    struct Entry {
        int i = 0, j = 0;
        double c = 0.0;
    };
    std::vector<Entry> lin_entries; ///< nonzeros of -(eps A + eps^alpha B)
    std::vector<Entry> z_entries;   ///< nonzeros of Z_f
    std::vector<Entry> a_entries;   ///< nonzeros of A_f, for the quad form
};

Kernel compile_kernel(const ModelSpec& m) {
    Kernel k;
    k.d = m.d;
    k.r = m.r();
    k.eps = m.epsilon;
    k.delta = m.delta;
    k.dps = k.r + (m.delta > 0.0 ? m.d : 0);
    const Eigen::MatrixXd L = -(m.epsilon * m.A_f + std::pow(m.epsilon, m.alpha) * m.B_f);
    for (int i = 0; i < k.d; ++i)
        for (int j = 0; j < k.d; ++j)
            if (L(i, j) != 0.0) k.lin_entries.push_back({i, j, L(i, j)});
    for (int i = 0; i < m.N.dim(); ++i) {
        for (const auto& [mono, coeff] : m.N.component(i)) {
            Kernel::NTerm t;
            t.comp = i;
            t.coeff = -to_double(coeff);
            for (int vidx = 0; vidx < static_cast<int>(mono.size()); ++vidx)
                for (int p = 0; p < mono[vidx]; ++p) {
                    if (t.nv >= static_cast<int>(t.v.size()))
                        throw ValidationError("run_ensemble: nonlinearity degree above 6");
                    t.v[t.nv++] = vidx;
                }
            if (t.nv == 0) continue; // constant terms cannot occur for homogeneous N
            k.terms.push_back(t);
        }
    }
    for (int i = 0; i < k.d; ++i)
        for (int j = 0; j < k.r; ++j)
            if (m.Z_f(i, j) != 0.0) k.z_entries.push_back({i, j, m.Z_f(i, j)});
    for (int i = 0; i < k.d; ++i)
        for (int j = 0; j < k.d; ++j)
            if (m.A_f(i, j) != 0.0) k.a_entries.push_back({i, j, m.A_f(i, j)});
    return k;
}

struct BlockResult {
    long index = 0;
    std::vector<double> sums; ///< 6 per record: e, e^2, q, q^2, v, v^2
    std::vector<long> alive;
    std::vector<long> exploded;
    long clips = 0;
};

struct RunPlan {
    long n_steps = 0;
    long n_records = 0;
    long n_blocks = 0;
    int stride = 1;
    double dt = 0.0;
    bool want_v = false;
    double gamma = 0.0;
};

/// Integrate one block of trajectories [base, base + width). WB = 0 keeps
/// the lane count a runtime value; WB > 0 bakes it into the loop bounds so
/// the per-step lane loops unroll to straight vector code.
template <int WB>
BlockResult run_block_impl(const ModelSpec& m, const Kernel& k, const SimConfig& cfg,
                           const RunPlan& plan, long block, int worker, Eigen::MatrixXd& endpoints,
                           const RecordHook& hook) {
    const long base = block * cfg.block_width;
    const int wb = WB > 0 ? WB : static_cast<int>(std::min<long>(cfg.block_width, cfg.n_traj - base));
    const int d = k.d;
    const long nw = static_cast<long>(wb);

    std::vector<double> x(static_cast<size_t>(d) * wb, 0.0);
    if (cfg.initial_states.size() > 0) {
        for (int i = 0; i < d; ++i)
            for (int l = 0; l < wb; ++l) x[static_cast<size_t>(i) * wb + l] = cfg.initial_states(base + l, i);
    } else if (cfg.initial_point.size() > 0) {
        for (int i = 0; i < d; ++i)
            for (int l = 0; l < wb; ++l) x[static_cast<size_t>(i) * wb + l] = cfg.initial_point[i];
    }
    std::vector<std::uint8_t> live(wb, 1);

    std::vector<GaussianStream> streams;
    streams.reserve(wb);
    for (int l = 0; l < wb; ++l) streams.emplace_back(cfg.master_seed, static_cast<std::uint64_t>(base + l));

    BlockResult res;
    res.index = block;
    res.sums.assign(static_cast<size_t>(plan.n_records) * 6, 0.0);
    res.alive.assign(plan.n_records, 0);

    std::vector<double> dx(static_cast<size_t>(d) * wb);
    std::vector<double> lane_tile, noise;
    if (plan.n_steps > 0) {
        lane_tile.resize(static_cast<size_t>(kLaneTile) * kStepsPerChunk * k.dps);
        noise.resize(static_cast<size_t>(kStepsPerChunk) * k.dps * wb);
    }
    std::vector<double> e_lane(wb), q_lane(wb), v_lane(wb);

    const double sq_forcing = std::sqrt(2.0 * k.eps * plan.dt);
    const double sq_iso = k.delta > 0.0 ? std::sqrt(2.0 * k.eps * k.delta * plan.dt) : 0.0;

    auto record = [&](long rec, double t) {
        double* sums = res.sums.data() + static_cast<size_t>(rec) * 6;
        for (int l = 0; l < wb; ++l) e_lane[l] = 0.0;
        for (int i = 0; i < d; ++i) {
            const double* xi = x.data() + static_cast<size_t>(i) * wb;
            for (int l = 0; l < wb; ++l) e_lane[l] += xi[l] * xi[l];
        }
        for (int l = 0; l < wb; ++l) {
            if (live[l] && !(std::isfinite(e_lane[l]) && e_lane[l] <= kExplosionEnergy)) {
                live[l] = 0;
                res.exploded.push_back(base + l);
                for (int i = 0; i < d; ++i) x[static_cast<size_t>(i) * wb + l] = 0.0;
                e_lane[l] = 0.0;
            }
        }
        for (int l = 0; l < wb; ++l) q_lane[l] = 0.0;
        for (const auto& a : k.a_entries) {
            const double* xi = x.data() + static_cast<size_t>(a.i) * wb;
            const double* xj = x.data() + static_cast<size_t>(a.j) * wb;
            for (int l = 0; l < wb; ++l) q_lane[l] += a.c * xi[l] * xj[l];
        }
        if (plan.want_v) {
            for (int l = 0; l < wb; ++l) {
                double g = plan.gamma * e_lane[l];
                if (g > kExpClip) {
                    g = kExpClip;
                    if (live[l]) ++res.clips;
                }
                v_lane[l] = std::exp(g);
            }
        }
        long n_alive = 0;
        for (int l = 0; l < wb; ++l) {
            if (!live[l]) continue;
            ++n_alive;
            sums[0] += e_lane[l];
            sums[1] += e_lane[l] * e_lane[l];
            sums[2] += q_lane[l];
            sums[3] += q_lane[l] * q_lane[l];
            if (plan.want_v) {
                sums[4] += v_lane[l];
                sums[5] += v_lane[l] * v_lane[l];
            }
        }
        res.alive[rec] = n_alive;
        if (hook) {
            RecordBatch batch;
            batch.block_index = block;
            batch.worker = worker;
            batch.traj_base = base;
            batch.width = wb;
            batch.dim = d;
            batch.record_index = rec;
            batch.t = t;
            batch.x = x.data();
            batch.alive = live.data();
            hook(batch);
        }
    };

    record(0, 0.0);

    long step = 0;
    long until_record = plan.stride;
    while (step < plan.n_steps) {
        const int chunk = static_cast<int>(std::min<long>(kStepsPerChunk, plan.n_steps - step));
        const int draws = chunk * k.dps;
        // Transpose lane-contiguous draws into step-major noise in tiles of
        // kLaneTile lanes, so each destination cache line is written whole.
        for (int l0 = 0; l0 < wb; l0 += kLaneTile) {
            const int lw = std::min(kLaneTile, wb - l0);
            for (int t = 0; t < lw; ++t)
                streams[l0 + t].fill(lane_tile.data() + static_cast<size_t>(t) * draws, draws);
            for (int idx = 0; idx < draws; ++idx) {
                double* __restrict dst = noise.data() + static_cast<size_t>(idx) * wb + l0;
                for (int t = 0; t < lw; ++t)
                    dst[t] = lane_tile[static_cast<size_t>(t) * draws + idx];
            }
        }
        for (int s = 0; s < chunk; ++s) {
            // dx = lin x - N(x)
            {
                double* __restrict dz = dx.data();
                const long total = static_cast<long>(d) * wb;
                for (long l = 0; l < total; ++l) dz[l] = 0.0;
            }
            for (const auto& e : k.lin_entries) {
                double* __restrict di = dx.data() + static_cast<size_t>(e.i) * wb;
                const double* __restrict xj = x.data() + static_cast<size_t>(e.j) * wb;
                for (int l = 0; l < wb; ++l) di[l] += e.c * xj[l];
            }
            for (const auto& t : k.terms) {
                double* __restrict dc = dx.data() + static_cast<size_t>(t.comp) * wb;
                const double* __restrict xa = x.data() + static_cast<size_t>(t.v[0]) * wb;
                if (t.nv == 2) {
                    const double* __restrict xb = x.data() + static_cast<size_t>(t.v[1]) * wb;
                    for (int l = 0; l < wb; ++l) dc[l] += t.coeff * xa[l] * xb[l];
                } else if (t.nv == 1) {
                    for (int l = 0; l < wb; ++l) dc[l] += t.coeff * xa[l];
                } else {
                    for (int l = 0; l < wb; ++l) {
                        double acc = t.coeff * xa[l];
                        for (int vi = 1; vi < t.nv; ++vi)
                            acc *= x[static_cast<size_t>(t.v[vi]) * wb + l];
                        dc[l] += acc;
                    }
                }
            }
            const double* gs = noise.data() + static_cast<size_t>(s) * k.dps * wb;
            for (int i = 0; i < d; ++i) {
                double* __restrict xi = x.data() + static_cast<size_t>(i) * wb;
                const double* __restrict di = dx.data() + static_cast<size_t>(i) * wb;
                for (int l = 0; l < wb; ++l) xi[l] += plan.dt * di[l];
            }
            for (const auto& z : k.z_entries) {
                double* __restrict xi = x.data() + static_cast<size_t>(z.i) * wb;
                const double* __restrict g = gs + static_cast<size_t>(z.j) * wb;
                const double c = sq_forcing * z.c;
                for (int l = 0; l < wb; ++l) xi[l] += c * g[l];
            }
            if (k.delta > 0.0) {
                for (int i = 0; i < d; ++i) {
                    double* __restrict xi = x.data() + static_cast<size_t>(i) * wb;
                    const double* __restrict g = gs + static_cast<size_t>(k.r + i) * wb;
                    for (int l = 0; l < wb; ++l) xi[l] += sq_iso * g[l];
                }
            }
            ++step;
            if (--until_record == 0) {
                record(step / plan.stride, static_cast<double>(step) * plan.dt);
                until_record = plan.stride;
            }
        }
    }
    (void)nw;

    for (int l = 0; l < wb; ++l)
        for (int i = 0; i < d; ++i) endpoints(base + l, i) = x[static_cast<size_t>(i) * wb + l];
    return res;
}

BlockResult run_block(const ModelSpec& m, const Kernel& k, const SimConfig& cfg,
                      const RunPlan& plan, long block, int worker, Eigen::MatrixXd& endpoints,
                      const RecordHook& hook) {
    const long base = block * cfg.block_width;
    const long width = std::min<long>(cfg.block_width, cfg.n_traj - base);
    if (width == 64 && cfg.block_width == 64)
        return run_block_impl<64>(m, k, cfg, plan, block, worker, endpoints, hook);
    return run_block_impl<0>(m, k, cfg, plan, block, worker, endpoints, hook);
}

} // namespace

std::vector<std::size_t> EnsembleRun::window_records() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= config.burn_in - 1e-12) idx.push_back(i);
    return idx;
}

Eigen::VectorXd step_em(const ModelSpec& m, const Eigen::VectorXd& x, double dt,
                        const Eigen::VectorXd& gaussians) {
    if (x.size() != m.d) throw ValidationError("step_em: state dimension mismatch");
    const int need = m.r() + (m.delta > 0.0 ? m.d : 0);
    if (gaussians.size() < need) throw ValidationError("step_em: not enough gaussian draws");
    Eigen::VectorXd out = x + drift_eval(m, x) * dt;
    const double s = std::sqrt(2.0 * m.epsilon * dt);
    for (int j = 0; j < m.r(); ++j) out += s * gaussians[j] * m.Z_f.col(j);
    if (m.delta > 0.0) {
        const double si = std::sqrt(2.0 * m.epsilon * m.delta * dt);
        out += si * gaussians.segment(m.r(), m.d);
    }
    return out;
}

EnsembleRun run_ensemble(const ModelSpec& m, const SimConfig& cfg, const RecordHook& hook) {
    const StructureReport rep = check_structure(m);
    if (!rep.all_pass())
        throw ValidationError("run_ensemble: structural checks failed (" + rep.witness + ")");
    if (!(cfg.dt > 0.0)) throw ValidationError("run_ensemble: dt must be positive");
    const double cap = m.dt_max();
    if (cfg.dt > cap * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "run_ensemble: dt " << cfg.dt << " exceeds the stability budget; use dt <= " << cap;
        throw ValidationError(os.str());
    }
    if (cfg.n_traj < 1) throw ValidationError("run_ensemble: n_traj must be at least 1");
    if (cfg.record_stride < 1) throw ValidationError("run_ensemble: record_stride must be at least 1");
    if (cfg.gamma_exp < 0.0) throw ValidationError("run_ensemble: gamma_exp must be nonnegative");
    if (cfg.block_width < 1) throw ValidationError("run_ensemble: block_width must be at least 1");
    if (!(cfg.t_final >= 0.0)) throw ValidationError("run_ensemble: t_final must be nonnegative");
    if (cfg.initial_states.size() > 0 &&
        (cfg.initial_states.rows() != cfg.n_traj || cfg.initial_states.cols() != m.d))
        throw ValidationError("run_ensemble: initial_states must be n_traj x d");
    if (cfg.initial_point.size() > 0 && cfg.initial_point.size() != m.d)
        throw ValidationError("run_ensemble: initial_point dimension mismatch");

    const Kernel kern = compile_kernel(m);
    RunPlan plan;
    plan.dt = cfg.dt;
    plan.stride = cfg.record_stride;
    plan.n_steps = cfg.t_final > 0.0
                       ? static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-9))
                       : 0;
    plan.n_records = plan.n_steps / plan.stride + 1;
    plan.n_blocks = (cfg.n_traj + cfg.block_width - 1) / cfg.block_width;
    plan.want_v = cfg.gamma_exp > 0.0;
    plan.gamma = cfg.gamma_exp;

    EnsembleRun run;
    run.config = cfg;
    run.model_hash = m.hash;
    run.n_steps = plan.n_steps;
    run.endpoints.resize(cfg.n_traj, m.d);
    run.times.resize(plan.n_records);
    for (long rec = 0; rec < plan.n_records; ++rec)
        run.times[rec] = static_cast<double>(rec) * plan.stride * plan.dt;

    std::vector<double> sums(static_cast<size_t>(plan.n_records) * 6, 0.0);
    std::vector<long> alive(plan.n_records, 0);

    auto merge = [&](BlockResult&& b) {
        for (size_t i = 0; i < sums.size(); ++i) sums[i] += b.sums[i];
        for (long rec = 0; rec < plan.n_records; ++rec) alive[rec] += b.alive[rec];
        run.exploded.insert(run.exploded.end(), b.exploded.begin(), b.exploded.end());
        run.clip_count += b.clips;
    };

    const int W = std::min<long>(worker_count(), plan.n_blocks);
    if (W <= 1) {
        for (long b = 0; b < plan.n_blocks; ++b)
            merge(run_block(m, kern, cfg, plan, b, 0, run.endpoints, hook));
    } else {
        // Workers pick blocks dynamically; the merge happens in block order
        // on this thread, so the float accumulations are scheduling
        // independent.
        std::mutex mu;
        std::condition_variable cv;
        std::map<long, BlockResult> ready;
        std::atomic<long> next{0};
        std::vector<std::thread> pool;
        pool.reserve(W);
        for (int w = 0; w < W; ++w) {
            pool.emplace_back([&, w]() {
                for (;;) {
                    const long b = next.fetch_add(1);
                    if (b >= plan.n_blocks) return;
                    BlockResult res = run_block(m, kern, cfg, plan, b, w, run.endpoints, hook);
                    std::lock_guard<std::mutex> lock(mu);
                    ready.emplace(b, std::move(res));
                    cv.notify_one();
                }
            });
        }
        for (long expect = 0; expect < plan.n_blocks; ++expect) {
            std::unique_lock<std::mutex> lock(mu);
            cv.wait(lock, [&]() { return ready.count(expect) > 0; });
            BlockResult res = std::move(ready.at(expect));
            ready.erase(expect);
            lock.unlock();
            merge(std::move(res));
        }
        for (auto& th : pool) th.join();
    }

    const double threshold = 0.001; // explosion budget: 0.1%
    if (run.explosion_fraction() > threshold) {
        std::ostringstream os;
        os << "run_ensemble: " << run.exploded.size() << " of " << cfg.n_traj
           << " trajectories exploded; reduce dt below " << cfg.dt;
        throw Error(os.str());
    }

    run.mean_energy.resize(plan.n_records);
    run.se_energy.resize(plan.n_records);
    run.mean_quad.resize(plan.n_records);
    run.se_quad.resize(plan.n_records);
    if (plan.want_v) {
        run.exp_moment.resize(plan.n_records);
        run.se_exp.resize(plan.n_records);
    }
    run.alive.assign(alive.begin(), alive.end());
    auto finalize = [](double s, double s2, long n, double& mean, double& se) {
        if (n <= 0) {
            mean = 0.0;
            se = 0.0;
            return;
        }
        mean = s / static_cast<double>(n);
        if (n >= 2) {
            const double var = std::max(0.0, (s2 - s * mean) / static_cast<double>(n - 1));
            se = std::sqrt(var / static_cast<double>(n));
        } else {
            se = 0.0;
        }
    };
    for (long rec = 0; rec < plan.n_records; ++rec) {
        const double* s = sums.data() + static_cast<size_t>(rec) * 6;
        finalize(s[0], s[1], alive[rec], run.mean_energy[rec], run.se_energy[rec]);
        finalize(s[2], s[3], alive[rec], run.mean_quad[rec], run.se_quad[rec]);
        if (plan.want_v) finalize(s[4], s[5], alive[rec], run.exp_moment[rec], run.se_exp[rec]);
    }
    for (long id : run.exploded)
        for (int i = 0; i < m.d; ++i) run.endpoints(id, i) = 0.0;
    return run;
}

BalanceResult energy_balance_residual(const EnsembleRun& run, const ModelSpec& m) {
    if (!(m.sum_z2 > 0.0))
        throw ValidationError("energy_balance_residual: model has no forcing (sum |Z_j|^2 = 0)");
    const auto window = run.window_records();
    if (window.size() < 4)
        throw ValidationError("energy_balance_residual: fewer than 4 records past burn_in");
    std::vector<double> series;
    series.reserve(window.size());
    for (std::size_t i : window) series.push_back(run.mean_quad[i]);
    BalanceResult out;
    out.target = m.sum_z2;
    out.window_mean = sample_mean(series);
    out.residual = std::abs(out.window_mean - out.target) / out.target;
    const int nb = std::clamp<int>(static_cast<int>(series.size() / 2), 2, 20);
    out.stderr_est = batch_means_stderr(series, nb) / out.target;
    return out;
}

RelaxationResult relaxation_time(const ModelSpec& m, const std::vector<double>& epsilons,
                                 const SimConfig& per_unit_template) {
    if (epsilons.empty()) throw ValidationError("relaxation_time: empty epsilon list");
    if (per_unit_template.initial_point.size() > 0 || per_unit_template.initial_states.size() > 0)
        throw ValidationError("relaxation_time: runs must start at the origin");
    RelaxationResult out;
    for (double eps : epsilons) {
        const ModelSpec me = m.with_epsilon(eps);
        SimConfig cfg = per_unit_template;
        cfg.dt = per_unit_template.dt > 0.0 ? per_unit_template.dt : me.dt_max();
        cfg.t_final = per_unit_template.t_final / eps;
        cfg.burn_in = 0.0;
        const EnsembleRun run = run_ensemble(me, cfg);
        const std::size_t nrec = run.times.size();
        const std::size_t tail = std::max<std::size_t>(2, nrec / 5);
        double plateau = 0.0;
        for (std::size_t i = nrec - tail; i < nrec; ++i) plateau += run.mean_energy[i];
        plateau /= static_cast<double>(tail);
        const double thr = (1.0 - std::exp(-1.0)) * plateau;
        RelaxationEntry entry;
        entry.epsilon = eps;
        entry.plateau = plateau;
        entry.censored = true;
        for (std::size_t i = 0; i < nrec; ++i) {
            if (run.mean_energy[i] >= thr) {
                if (i == 0) {
                    entry.tau = run.times[0];
                } else {
                    const double e0 = run.mean_energy[i - 1], e1 = run.mean_energy[i];
                    const double t0 = run.times[i - 1], t1 = run.times[i];
                    entry.tau = e1 > e0 ? t0 + (thr - e0) / (e1 - e0) * (t1 - t0) : t1;
                }
                entry.censored = false;
                break;
            }
        }
        out.entries.push_back(entry);
    }
    std::vector<double> lx, ly;
    for (const auto& e : out.entries)
        if (!e.censored && e.tau > 0.0) {
            lx.push_back(std::log(e.epsilon));
            ly.push_back(std::log(e.tau));
        }
    if (lx.size() >= 2) {
        const LinearFit fit = least_squares_fit(lx, ly);
        out.slope = fit.slope;
        out.intercept = fit.intercept;
    }
    return out;
}

MomentDecayReport moment_decay_check(const ModelSpec& m, const SimConfig& cfg,
                                     const LyapunovCertificate& cert) {
    SimConfig local = cfg;
    local.gamma_exp = cert.gamma;
    double v0 = 1.0;
    if (local.initial_point.size() > 0)
        v0 = std::exp(cert.gamma * local.initial_point.squaredNorm());
    if (!std::isfinite(v0))
        throw ValidationError("moment_decay_check: V(x0) is not finite");
    const EnsembleRun run = run_ensemble(m, local);
    MomentDecayReport rep;
    rep.pass = true;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    rep.clipped = run.clip_count > 0;
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        const double t = run.times[i];
        const double bound = cert.b / cert.kappa + std::exp(-m.epsilon * cert.kappa * t) * v0;
        const double allowance = 5.0 * run.se_exp[i];
        const double margin = bound + allowance - run.exp_moment[i];
        rep.times.push_back(t);
        rep.values.push_back(run.exp_moment[i]);
        rep.bounds.push_back(bound);
        rep.stderrs.push_back(run.se_exp[i]);
        if (margin < rep.worst_margin) rep.worst_margin = margin;
        if (margin < 0.0) rep.pass = false;
    }
    return rep;
}

} // namespace hypomix
