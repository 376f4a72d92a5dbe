#include "hypomix/fp_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hypomix/errors.hpp"
#include "hypomix/rng.hpp"

namespace hypomix {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

double op_norm1(const SpMat& M) {
    double worst = 0.0;
    for (int c = 0; c < M.outerSize(); ++c) {
        double s = 0.0;
        for (SpMat::InnerIterator it(M, c); it; ++it) s += std::abs(it.value());
        worst = std::max(worst, s);
    }
    return worst;
}

double max_abs_diag(const SpMat& M) {
    double worst = 0.0;
    for (int c = 0; c < M.outerSize(); ++c)
        for (SpMat::InnerIterator it(M, c); it; ++it)
            if (it.row() == it.col()) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

SpMat identity_like(const SpMat& M) {
    SpMat I(M.rows(), M.cols());
    I.setIdentity();
    return I;
}

} // namespace

StationaryResult stationary_solve(const DiscreteOperator& op, double tol, int max_iter) {
    const SpMat& M = op.matrix;
    const long N = M.rows();
    const double hd = std::pow(op.grid.h(), op.grid.dim);
    const double shift = 1e-8 * max_abs_diag(M);
    SpMat A = M + shift * identity_like(M);
    A.makeCompressed();
    Eigen::UmfPackLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success)
        throw NumericsError("stationary_solve: factorization of the shifted operator failed");

    const double norm_m = op_norm1(M);
    StationaryResult out;
    Eigen::VectorXd f = Eigen::VectorXd::Ones(N);
    Eigen::VectorXd g;
    for (int it = 0; it < max_iter; ++it) {
        g = lu.solve(f);
        f = g.cwiseMax(0.0);
        const double mass = f.sum() * hd;
        if (!(mass > 0.0))
            throw NumericsError("stationary_solve: iterate lost all mass");
        f /= mass;
        const double res = (M * f).norm() / (norm_m * f.norm());
        out.residual_history.push_back(res);
        out.iterations = it + 1;
        if (res < tol) break;
        // stagnation: no progress over the last five sweeps
        const std::size_t nh = out.residual_history.size();
        if (nh >= 6 && res > 1e-8 &&
            res > 0.999 * out.residual_history[nh - 6])
            break;
    }
    out.f = f;
    out.residual = out.residual_history.back();
    if (out.residual > 1e-8) {
        std::ostringstream os;
        os << "stationary_solve: inverse power stalled at residual " << out.residual
           << " after " << out.iterations << " iterations; history:";
        for (double r : out.residual_history) os << " " << r;
        throw NumericsError(os.str());
    }
    return out;
}

GapResult spectral_gap(const DiscreteOperator& op, const Eigen::VectorXd& f_hat,
                       double sigma_scale, int krylov_dim, double tol) {
    const long N = op.matrix.rows();
    if (f_hat.size() != N) throw DimensionError("spectral_gap: stationary vector size mismatch");
    const double sigma = sigma_scale * op.epsilon;
    if (!(sigma > 0.0)) throw ValidationError("spectral_gap: shift must be positive");

    SpMat A = SpMat(op.matrix.transpose()) - sigma * identity_like(op.matrix);
    A.makeCompressed();
    Eigen::UmfPackLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success)
        throw NumericsError("spectral_gap: factorization of the shifted transpose failed");

    // deflation weights: w . 1 = 1, w spans the left kernel direction
    Eigen::VectorXd w = f_hat;
    const double ws = w.sum();
    if (!(ws > 0.0)) throw ValidationError("spectral_gap: stationary vector has no mass");
    w /= ws;
    auto deflate = [&](Eigen::VectorXd& v) { v.array() -= w.dot(v); };

    const int m = krylov_dim;
    Eigen::MatrixXd V(N, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    {
        GaussianStream gs(0xA21D0u, 0);
        std::vector<double> buf(static_cast<std::size_t>(N));
        gs.fill(buf.data(), buf.size());
        Eigen::VectorXd v0 = Eigen::Map<Eigen::VectorXd>(buf.data(), N);
        deflate(v0);
        V.col(0) = v0 / v0.norm();
    }
    int m_eff = m;
    bool breakdown = false;
    Eigen::VectorXd u;
    for (int j = 0; j < m; ++j) {
        u = lu.solve(V.col(j));
        deflate(u);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) {
                const double c = V.col(i).dot(u);
                u -= c * V.col(i);
                H(i, j) += c;
            }
        const double nrm = u.norm();
        H(j + 1, j) = nrm;
        if (nrm < 1e-12) {
            m_eff = j + 1;
            breakdown = true;
            break;
        }
        V.col(j + 1) = u / nrm;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(m_eff, m_eff));
    if (es.info() != Eigen::Success)
        throw NumericsError("spectral_gap: Hessenberg eigensolve failed");
    const double h_last = breakdown ? 0.0 : H(m_eff, m_eff - 1);

    struct Ritz {
        std::complex<double> lambda;
        double rel_res;
        double theta_mag;
    };
    std::vector<Ritz> ritz;
    for (int i = 0; i < m_eff; ++i) {
        const std::complex<double> theta = es.eigenvalues()[i];
        const double tmag = std::abs(theta);
        if (tmag < 1e-14) continue;
        const double res = std::abs(h_last) * std::abs(es.eigenvectors()(m_eff - 1, i));
        ritz.push_back({sigma + 1.0 / theta, res / tmag, tmag});
    }
    std::sort(ritz.begin(), ritz.end(),
              [](const Ritz& a, const Ritz& b) { return a.lambda.real() > b.lambda.real(); });

    GapResult out;
    out.arnoldi_dim = m_eff;
    for (const auto& r : ritz) {
        if (r.lambda.real() >= 0.0) continue; // deflated kernel residue
        out.eigenvalues.push_back(r.lambda);
        out.ritz_residuals.push_back(r.rel_res);
        if (out.eigenvalues.size() >= 6) break;
    }
    if (out.eigenvalues.empty() || out.ritz_residuals.front() > tol) {
        std::ostringstream os;
        os << "spectral_gap: Arnoldi did not converge; relative Ritz residuals:";
        for (const auto& r : ritz) os << " " << r.rel_res;
        throw NumericsError(os.str());
    }
    out.gap = -out.eigenvalues.front().real();
    return out;
}

SemigroupResult semigroup_apply(const DiscreteOperator& op, const Eigen::MatrixXd& f0, double t,
                                int steps, bool backward) {
    if (!(t > 0.0)) throw ValidationError("semigroup_apply: t must be positive");
    if (steps < 1) throw ValidationError("semigroup_apply: need at least one step");
    if (f0.rows() != op.matrix.rows())
        throw DimensionError("semigroup_apply: grid function size mismatch");

    const double dt = t / steps;
    SpMat M = backward ? SpMat(op.matrix.transpose()) : op.matrix;
    M.makeCompressed();
    const SpMat I = identity_like(M);
    SpMat A = I - (dt / 2.0) * M;
    A.makeCompressed();
    SpMat B = I + (dt / 2.0) * M;
    B.makeCompressed();
    Eigen::UmfPackLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success)
        throw NumericsError("semigroup_apply: time step factorization failed");

    // Rannacher start: two implicit-Euler half steps share the CN matrix
    Eigen::MatrixXd f = lu.solve(f0);
    Eigen::MatrixXd g = lu.solve(f);
    f.swap(g);
    for (int k = 1; k < steps; ++k) {
        g = B * f;
        f = lu.solve(g);
    }

    SemigroupResult out;
    const double floor_tol = -1e-10 * std::max(f0.maxCoeff(), 0.0);
    out.undershoot = f.minCoeff() < floor_tol;
    if (!backward) {
        // forward evolution conserves mass; backward preserves constants instead
        for (int c = 0; c < f0.cols(); ++c) {
            const double m0 = f0.col(c).sum();
            if (std::abs(m0) > 0.0)
                out.mass_drift =
                    std::max(out.mass_drift, std::abs(f.col(c).sum() - m0) / std::abs(m0));
        }
    }
    out.f = std::move(f);
    return out;
}

namespace {

int default_tv_steps(double epsilon, double t, int steps) {
    if (steps > 0) return steps;
    return std::max(60, static_cast<int>(std::ceil(40.0 * epsilon * t)));
}

Eigen::MatrixXd evolve_delta_columns(const DiscreteOperator& op, const std::vector<long>& nodes,
                                     double t, int steps) {
    const double hd = std::pow(op.grid.h(), op.grid.dim);
    Eigen::MatrixXd f0 = Eigen::MatrixXd::Zero(op.matrix.rows(), nodes.size());
    for (std::size_t c = 0; c < nodes.size(); ++c) {
        if (nodes[c] < 0 || nodes[c] >= op.matrix.rows())
            throw ValidationError("tv_overlap: start cell outside the grid");
        f0(nodes[c], c) = 1.0 / hd;
    }
    return semigroup_apply(op, f0, t, default_tv_steps(op.epsilon, t, steps)).f;
}

} // namespace

double tv_overlap(const DiscreteOperator& op, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  double t, int steps) {
    const long ix = op.grid.nearest(x), iy = op.grid.nearest(y);
    if (ix == iy) return 0.0;
    const Eigen::MatrixXd f = evolve_delta_columns(op, {ix, iy}, t, steps);
    const double hd = std::pow(op.grid.h(), op.grid.dim);
    return (f.col(0) - f.col(1)).cwiseAbs().sum() * hd;
}

Eigen::MatrixXd tv_overlap_matrix(const DiscreteOperator& op, const std::vector<long>& nodes,
                                  double t, int steps) {
    const Eigen::MatrixXd f = evolve_delta_columns(op, nodes, t, steps);
    const double hd = std::pow(op.grid.h(), op.grid.dim);
    const int k = static_cast<int>(nodes.size());
    Eigen::MatrixXd tv = Eigen::MatrixXd::Zero(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            const double v = (f.col(a) - f.col(b)).cwiseAbs().sum() * hd;
            tv(a, b) = v;
            tv(b, a) = v;
        }
    return tv;
}

CollapseReport collapse_check(const std::vector<DiscreteOperator>& ops,
                              const std::vector<Eigen::VectorXd>& f_hats,
                              const Eigen::VectorXd& f_obs, double s_max, int steps_per_unit_s,
                              double s_min, int n_eval) {
    if (ops.empty()) throw ValidationError("collapse_check: no operators");
    if (ops.size() != f_hats.size())
        throw DimensionError("collapse_check: need one stationary density per operator");
    if (!(s_max > s_min && s_min >= 0.0))
        throw ValidationError("collapse_check: need 0 <= s_min < s_max");
    const int steps = static_cast<int>(std::lround(s_max * steps_per_unit_s));
    if (steps < 2) throw ValidationError("collapse_check: too few steps");

    CollapseReport rep;
    rep.eval_s.resize(n_eval);
    for (int i = 0; i < n_eval; ++i)
        rep.eval_s[i] = s_min + (s_max - s_min) * i / (n_eval - 1);

    for (std::size_t c = 0; c < ops.size(); ++c) {
        const DiscreteOperator& op = ops[c];
        if (f_obs.size() != op.matrix.rows())
            throw DimensionError("collapse_check: observable size mismatch");
        const double hd = std::pow(op.grid.h(), op.grid.dim);
        Eigen::VectorXd w = f_hats[c] * hd;
        w /= w.sum();
        Eigen::VectorXd g = f_obs;
        g.array() -= w.dot(f_obs);
        const double denom = g.cwiseAbs().maxCoeff();
        CollapseCurve curve;
        curve.epsilon = op.epsilon;
        curve.s.reserve(steps + 1);
        curve.value.reserve(steps + 1);
        const double ds = s_max / steps;
        auto d_of = [&](const Eigen::VectorXd& v) {
            return denom > 0.0 ? std::sqrt(std::max(0.0, w.dot(v.cwiseProduct(v)))) / denom : 0.0;
        };
        curve.s.push_back(0.0);
        curve.value.push_back(d_of(g));

        const double dt = (s_max / op.epsilon) / steps;
        SpMat M = SpMat(op.matrix.transpose());
        M.makeCompressed();
        const SpMat I = identity_like(M);
        SpMat A = I - (dt / 2.0) * M;
        A.makeCompressed();
        SpMat B = I + (dt / 2.0) * M;
        B.makeCompressed();
        Eigen::UmfPackLU<SpMat> lu(A);
        if (lu.info() != Eigen::Success)
            throw NumericsError("collapse_check: time step factorization failed");
        Eigen::VectorXd v = lu.solve(g);
        Eigen::VectorXd tmp = lu.solve(v);
        v.swap(tmp);
        curve.s.push_back(ds);
        curve.value.push_back(d_of(v));
        for (int k = 1; k < steps; ++k) {
            tmp = B * v;
            v = lu.solve(tmp);
            curve.s.push_back((k + 1) * ds);
            curve.value.push_back(d_of(v));
        }
        curve.monotone = true;
        for (std::size_t i = 1; i < curve.value.size(); ++i)
            if (curve.value[i] > curve.value[i - 1] + 1e-12 * curve.value.front())
                curve.monotone = false;
        rep.curves.push_back(std::move(curve));
    }

    // all curves share the s grid, so pointwise interpolation is common
    auto interp = [&](const CollapseCurve& c, double s) {
        const double ds = s_max / steps;
        const double pos = s / ds;
        const int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, steps - 1);
        const double frac = pos - i0;
        return c.value[i0] * (1.0 - frac) + c.value[i0 + 1] * frac;
    };
    for (std::size_t a = 0; a < rep.curves.size(); ++a)
        for (std::size_t b = a + 1; b < rep.curves.size(); ++b)
            for (double s : rep.eval_s)
                rep.defect = std::max(
                    rep.defect, std::abs(interp(rep.curves[a], s) - interp(rep.curves[b], s)));
    return rep;
}

ParRegResult parreg_diagnostic(const DiscreteOperator& op, const Eigen::VectorXd& f_hat,
                               int trials, std::uint64_t seed, int steps) {
    if (trials < 1) throw ValidationError("parreg_diagnostic: need at least one trial");
    const long N = op.matrix.rows();
    const double hd = std::pow(op.grid.h(), op.grid.dim);
    Eigen::VectorXd w = f_hat * hd;
    w /= w.sum();

    std::vector<char> inner(N);
    const double half = op.grid.R / 2.0;
    for (long i = 0; i < N; ++i) inner[i] = op.grid.point(i).norm() <= half ? 1 : 0;

    const double t = 1.0 / op.epsilon;
    Eigen::MatrixXd F(N, trials);
    std::vector<double> u(static_cast<std::size_t>(N));
    for (int c = 0; c < trials; ++c) {
        GaussianStream gs(seed, static_cast<std::uint64_t>(c));
        gs.fill_uniform(u.data(), u.size());
        for (long i = 0; i < N; ++i) F(i, c) = u[i] <= 0.5 ? -1.0 : 1.0;
    }
    const Eigen::MatrixXd G = semigroup_apply(op, F, t, steps, /*backward=*/true).f;

    ParRegResult out;
    for (int c = 0; c < trials; ++c) {
        const double l2 = std::sqrt(w.dot(F.col(c).cwiseProduct(F.col(c))));
        double sup = 0.0;
        for (long i = 0; i < N; ++i)
            if (inner[i]) sup = std::max(sup, std::abs(G(i, c)));
        const double ratio = sup / l2;
        out.ratios.push_back(ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
    }
    return out;
}

DeltaLimitReport delta_limit_check(const ModelSpec& model, const GridSpec& grid,
                                   const std::vector<double>& delta_list) {
    if (delta_list.size() < 2 || delta_list.back() != 0.0)
        throw ValidationError("delta_limit_check: list must end at delta = 0");
    for (std::size_t i = 1; i < delta_list.size(); ++i)
        if (!(delta_list[i] < delta_list[i - 1]))
            throw ValidationError("delta_limit_check: deltas must be strictly decreasing");

    const double hd = std::pow(grid.h(), grid.dim);
    std::vector<Eigen::VectorXd> fs;
    for (double delta : delta_list) {
        const DiscreteOperator op = discretize(model, grid, delta, /*pure_upwind=*/true);
        fs.push_back(stationary_solve(op).f);
    }
    DeltaLimitReport rep;
    const Eigen::VectorXd& f0 = fs.back();
    for (std::size_t i = 0; i + 1 < delta_list.size(); ++i)
        rep.rows.push_back({delta_list[i], (fs[i] - f0).cwiseAbs().sum() * hd});
    rep.strictly_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].l1_gap < rep.rows[i - 1].l1_gap)) rep.strictly_decreasing = false;
    return rep;
}

} // namespace hypomix
