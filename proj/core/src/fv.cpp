#include "hypomix/fv.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "hypomix/errors.hpp"

namespace hypomix {

long GridSpec::nearest(const Eigen::VectorXd& x) const {
    if (x.size() != dim) throw DimensionError("GridSpec::nearest: point dimension mismatch");
    int multi[3] = {0, 0, 0};
    for (int k = 0; k < dim; ++k) {
        const int m = static_cast<int>(std::floor((x[k] + R) / h()));
        multi[k] = std::clamp(m, 0, n - 1);
    }
    return flat(multi);
}

DiscreteOperator discretize(const ModelSpec& model, const GridSpec& grid, double delta,
                            bool pure_upwind, double peclet_threshold) {
    if (grid.dim != model.d) throw DimensionError("discretize: grid dimension must match model");
    if (grid.dim < 1 || grid.dim > 3) throw ValidationError("discretize: dim must be 1, 2 or 3");
    if (grid.n < 16) throw ValidationError("discretize: need at least 16 cells per axis");
    if (delta < 0.0) throw ValidationError("discretize: delta must be nonnegative");

    const int d = grid.dim;
    const int n = grid.n;
    const double h = grid.h();
    const double eps = model.epsilon;
    const long N = grid.cells();

    // diffusion tensor eps (Z Z^T + delta I), split into axis and diagonal links
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
    if (model.r() > 0) S = model.Z_f * model.Z_f.transpose();
    Eigen::MatrixXd D = eps * (S + delta * Eigen::MatrixXd::Identity(d, d));
    DiscreteOperator op;
    op.grid = grid;
    op.epsilon = eps;
    op.delta = delta;
    op.model_hash = model.hash;
    op.pure_upwind = pure_upwind;

    Eigen::VectorXd axis_cond(d); // conductance coefficient per axis
    for (int k = 0; k < d; ++k) {
        double a = D(k, k);
        for (int l = 0; l < d; ++l)
            if (l != k) a -= std::abs(D(k, l));
        if (a < 0.0) {
            a = 0.0;
            op.cross_limited = true;
        }
        axis_cond[k] = a;
    }

    long strides[3] = {1, n, static_cast<long>(n) * n};
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(N * (2 * d + 1));
    double max_face_speed = 0.0;

    int multi[3] = {0, 0, 0};
    Eigen::VectorXd xf(d);
    for (long i = 0; i < N; ++i) {
        grid.unflatten(i, multi);
        for (int k = 0; k < d; ++k) {
            if (multi[k] + 1 >= n) continue;
            const long j = i + strides[k];
            // face between cells multi[k] and multi[k]+1 along axis k
            for (int l = 0; l < d; ++l) xf[l] = grid.center(multi[l]);
            xf[k] = -grid.R + (multi[k] + 1) * h;
            const double bf = drift_eval(model, xf)[k];
            max_face_speed = std::max(max_face_speed, std::abs(bf));
            // diffusion link
            const double g = axis_cond[k] / (h * h);
            if (g != 0.0) {
                trips.emplace_back(i, j, g);
                trips.emplace_back(j, i, g);
                trips.emplace_back(i, i, -g);
                trips.emplace_back(j, j, -g);
            }
            // advection through the face, flux positive toward j
            const bool central =
                !pure_upwind && std::abs(bf) * h <= 2.0 * std::min(eps * delta, axis_cond[k]);
            if (central) {
                const double c = bf / (2.0 * h);
                trips.emplace_back(i, i, -c);
                trips.emplace_back(i, j, -c);
                trips.emplace_back(j, i, c);
                trips.emplace_back(j, j, c);
            } else if (bf > 0.0) {
                trips.emplace_back(i, i, -bf / h);
                trips.emplace_back(j, i, bf / h);
            } else if (bf < 0.0) {
                trips.emplace_back(i, j, -bf / h);
                trips.emplace_back(j, j, bf / h);
            }
        }
        // diagonal links for cross diffusion
        for (int k = 0; k < d; ++k)
            for (int l = k + 1; l < d; ++l) {
                if (D(k, l) == 0.0) continue;
                const int sl = D(k, l) > 0.0 ? 1 : -1;
                // link from this cell toward +e_k + sl*e_l
                const int mk = multi[k] + 1;
                const int ml = multi[l] + sl;
                if (mk >= n || ml < 0 || ml >= n) continue;
                const long j = i + strides[k] + sl * strides[l];
                const double g = std::abs(D(k, l)) / (h * h);
                trips.emplace_back(i, j, g);
                trips.emplace_back(j, i, g);
                trips.emplace_back(i, i, -g);
                trips.emplace_back(j, j, -g);
            }
    }

    op.matrix.resize(N, N);
    op.matrix.setFromTriplets(trips.begin(), trips.end());
    op.matrix.makeCompressed();

    double min_diff = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k) min_diff = std::min(min_diff, S(k, k));
    const double den = 2.0 * eps * min_diff + eps * delta;
    op.peclet = den > 0.0 ? h * max_face_speed / den
                          : std::numeric_limits<double>::infinity();
    op.peclet_warning = !(op.peclet <= peclet_threshold);
    return op;
}

double mass_defect(const DiscreteOperator& op) {
    const auto& M = op.matrix;
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(M.cols());
    double scale = 0.0;
    for (int c = 0; c < M.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, c); it; ++it) {
            colsum[c] += it.value();
            if (it.row() == it.col()) scale = std::max(scale, std::abs(it.value()));
        }
    if (scale == 0.0) scale = 1.0;
    return colsum.cwiseAbs().maxCoeff() / scale;
}

double min_offdiagonal(const DiscreteOperator& op) {
    const auto& M = op.matrix;
    double worst = 0.0;
    for (int c = 0; c < M.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, c); it; ++it)
            if (it.row() != it.col()) worst = std::min(worst, it.value());
    return worst;
}

double grid_mass(const DiscreteOperator& op, const Eigen::VectorXd& f) {
    return f.sum() * std::pow(op.grid.h(), op.grid.dim);
}

namespace {
constexpr char kMagic[8] = {'H', 'Y', 'F', 'V', '0', '0', '0', '1'};
}

void write_density_binary(const std::string& path, const GridSpec& grid, double epsilon,
                          double delta, const Eigen::VectorXd& values) {
    if (values.size() != grid.cells())
        throw DimensionError("write_density_binary: value count does not match grid");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw Error("write_density_binary: cannot open " + path);
    const std::int32_t dim = grid.dim, n = grid.n;
    const std::int64_t count = values.size();
    bool ok = std::fwrite(kMagic, 1, 8, fp) == 8 &&
              std::fwrite(&dim, sizeof dim, 1, fp) == 1 &&
              std::fwrite(&n, sizeof n, 1, fp) == 1 &&
              std::fwrite(&grid.R, sizeof grid.R, 1, fp) == 1 &&
              std::fwrite(&epsilon, sizeof epsilon, 1, fp) == 1 &&
              std::fwrite(&delta, sizeof delta, 1, fp) == 1 &&
              std::fwrite(&count, sizeof count, 1, fp) == 1 &&
              std::fwrite(values.data(), sizeof(double), values.size(), fp) ==
                  static_cast<std::size_t>(values.size());
    std::fclose(fp);
    if (!ok) throw Error("write_density_binary: short write to " + path);
}

DensitySnapshot read_density_binary(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw Error("read_density_binary: cannot open " + path);
    char magic[8];
    std::int32_t dim = 0, n = 0;
    std::int64_t count = 0;
    DensitySnapshot snap;
    bool ok = std::fread(magic, 1, 8, fp) == 8 && std::memcmp(magic, kMagic, 8) == 0 &&
              std::fread(&dim, sizeof dim, 1, fp) == 1 &&
              std::fread(&n, sizeof n, 1, fp) == 1 &&
              std::fread(&snap.grid.R, sizeof snap.grid.R, 1, fp) == 1 &&
              std::fread(&snap.epsilon, sizeof snap.epsilon, 1, fp) == 1 &&
              std::fread(&snap.delta, sizeof snap.delta, 1, fp) == 1 &&
              std::fread(&count, sizeof count, 1, fp) == 1;
    if (ok) {
        snap.grid.dim = dim;
        snap.grid.n = n;
        ok = dim >= 1 && dim <= 3 && count == snap.grid.cells();
    }
    if (ok) {
        snap.values.resize(count);
        ok = std::fread(snap.values.data(), sizeof(double), count, fp) ==
             static_cast<std::size_t>(count);
    }
    std::fclose(fp);
    if (!ok) throw Error("read_density_binary: malformed container " + path);
    return snap;
}

void write_density_csv(const std::string& path, const GridSpec& grid,
                       const Eigen::VectorXd& values) {
    if (values.size() != grid.cells())
        throw DimensionError("write_density_csv: value count does not match grid");
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw Error("write_density_csv: cannot open " + path);
    for (int k = 0; k < grid.dim; ++k) std::fprintf(fp, "x%d,", k + 1);
    std::fprintf(fp, "value\n");
    int multi[3];
    for (long i = 0; i < values.size(); ++i) {
        grid.unflatten(i, multi);
        for (int k = 0; k < grid.dim; ++k) std::fprintf(fp, "%.17g,", grid.center(multi[k]));
        std::fprintf(fp, "%.17g\n", values[i]);
    }
    std::fclose(fp);
}

} // namespace hypomix
