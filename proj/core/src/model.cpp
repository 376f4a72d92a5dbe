#include "hypomix/model.hpp"

#include <cmath>
#include <sstream>

#include "hypomix/errors.hpp"

namespace hypomix {

namespace {

bool rational_spd(const std::vector<std::vector<Rat>>& A, std::string& witness) {
    const int d = static_cast<int>(A.size());
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (A[i][j] != A[j][i]) {
                witness = "A[" + std::to_string(i) + "][" + std::to_string(j) + "] != transpose";
                return false;
            }
    // exact LDL^T elimination: SPD iff every pivot is positive
    auto W = A;
    for (int k = 0; k < d; ++k) {
        if (W[k][k] <= 0) {
            witness = "nonpositive pivot at step " + std::to_string(k);
            return false;
        }
        for (int i = k + 1; i < d; ++i) {
            Rat f = W[i][k] / W[k][k];
            for (int j = k; j < d; ++j) W[i][j] -= f * W[k][j];
        }
    }
    return true;
}

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                           41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

/// Deterministic quasi-random direction sample of sup_{|x|=1} |F(x)|.
double sampled_sphere_norm(const PolyVectorField& F) {
    const int d = F.dim();
    if (F.is_zero()) return 0.0;
    const int npairs = (d + 1) / 2;
    double best = 0.0;
    Eigen::VectorXd x(d);
    for (std::uint64_t i = 1; i <= 8192; ++i) {
        for (int k = 0; k < npairs; ++k) {
            double u1 = halton(i, kPrimes[2 * k]);
            double u2 = halton(i, kPrimes[2 * k + 1]);
            u1 = (u1 == 0.0) ? 0.5 : u1;
            double rr = std::sqrt(-2.0 * std::log(u1));
            double z1 = rr * std::cos(2.0 * M_PI * u2);
            double z2 = rr * std::sin(2.0 * M_PI * u2);
            x[2 * k] = z1;
            if (2 * k + 1 < d) x[2 * k + 1] = z2;
        }
        double nx = x.norm();
        if (nx == 0.0) continue;
        best = std::max(best, F.eval(x / nx).norm());
    }
    return best;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void append_matrix(std::ostringstream& os, const std::vector<std::vector<Rat>>& M) {
    for (const auto& row : M) {
        for (const auto& v : row) os << rat_to_string(v) << ",";
        os << ";";
    }
}

char buf17[64];
std::string g17(double v) {
    std::snprintf(buf17, sizeof(buf17), "%.17g", v);
    return buf17;
}

} // namespace

void ModelSpec::finalize() {
    if (d <= 0) throw ValidationError("model dimension must be positive");
    auto square = [&](const std::vector<std::vector<Rat>>& M, const char* name) {
        if (static_cast<int>(M.size()) != d) throw ValidationError(std::string(name) + " must be d x d");
        for (const auto& row : M)
            if (static_cast<int>(row.size()) != d) throw ValidationError(std::string(name) + " must be d x d");
    };
    square(A, "A");
    square(B, "B");
    if (N.dim() != d) throw ValidationError("N dimension != d");
    for (const auto& z : Z)
        if (static_cast<int>(z.size()) != d) throw ValidationError("Z vector dimension != d");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
    if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("delta must lie in [0, 1]");
    if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");

    A_f.resize(d, d);
    B_f.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            A_f(i, j) = to_double(A[i][j]);
            B_f(i, j) = to_double(B[i][j]);
        }
    Z_f.resize(d, static_cast<int>(Z.size()));
    sum_z2 = 0.0;
    for (size_t j = 0; j < Z.size(); ++j) {
        for (int i = 0; i < d; ++i) Z_f(i, static_cast<int>(j)) = to_double(Z[j][i]);
        sum_z2 += Z_f.col(static_cast<int>(j)).squaredNorm();
    }

    bool diag = true;
    for (int i = 0; i < d && diag; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && A[i][j] != 0) {
                diag = false;
                break;
            }
    if (diag) {
        lambda_min_A = lambda_max_A = to_double(A[0][0]);
        for (int i = 1; i < d; ++i) {
            lambda_min_A = std::min(lambda_min_A, to_double(A[i][i]));
            lambda_max_A = std::max(lambda_max_A, to_double(A[i][i]));
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A_f + A_f.transpose()));
        lambda_min_A = es.eigenvalues().minCoeff();
        lambda_max_A = es.eigenvalues().maxCoeff();
    }
    B_norm = B_f.isZero(0.0) ? 0.0 : B_f.jacobiSvd().singularValues()(0);
    degree_p = N.homogeneous_degree().value_or(N.degree());
    N_op_norm = sampled_sphere_norm(N);

    std::ostringstream os;
    os << "label=" << label << ";d=" << d << ";alpha=" << g17(alpha) << ";epsilon=" << g17(epsilon)
       << ";delta=" << g17(delta) << ";A=";
    append_matrix(os, A);
    os << "B=";
    append_matrix(os, B);
    os << "N=" << N.to_string() << ";Z=";
    append_matrix(os, Z);
    hash = fnv1a(os.str());
}

Eigen::VectorXd ModelSpec::drift(const Eigen::VectorXd& x) const {
    if (x.size() != d) throw DimensionError("drift: point dimension != model dimension");
    Eigen::VectorXd out = -epsilon * (A_f * x);
    if (B_norm != 0.0) out -= std::pow(epsilon, alpha) * (B_f * x);
    if (!N.is_zero()) out -= N.eval(x);
    return out;
}

PolyVectorField ModelSpec::bracket_drift(const Rat& eps1, const Rat& eps2) const {
    PolyVectorField f = N;
    if (eps1 != 0) f = f + linear_A().scaled(eps1);
    if (eps2 != 0) f = f + linear_B().scaled(eps2);
    return f;
}

ModelSpec ModelSpec::with_epsilon(double e) const {
    ModelSpec m = *this;
    m.epsilon = e;
    m.finalize();
    return m;
}

ModelSpec ModelSpec::with_delta(double dl) const {
    ModelSpec m = *this;
    m.delta = dl;
    m.finalize();
    return m;
}

double ModelSpec::rms_radius() const {
    if (sum_z2 <= 0.0 || lambda_min_A <= 0.0) return 0.0;
    return std::sqrt(sum_z2 / lambda_min_A);
}

double ModelSpec::r_bound() const { return std::max(1.0, 4.0 * rms_radius()); }

double ModelSpec::dt_max() const {
    double rate = epsilon * lambda_max_A + std::pow(epsilon, alpha) * B_norm;
    if (degree_p > 0 && N_op_norm > 0.0)
        rate += degree_p * N_op_norm * std::pow(r_bound(), degree_p - 1);
    return 0.1 / rate;
}

StructureReport check_structure(const ModelSpec& m) {
    StructureReport rep;
    std::string w;
    rep.a_spd = rational_spd(m.A, w);
    if (!rep.a_spd) rep.witness = w;

    rep.b_skew = true;
    for (int i = 0; i < m.d && rep.b_skew; ++i)
        for (int j = 0; j < m.d; ++j)
            if (m.B[i][j] != -m.B[j][i]) {
                rep.b_skew = false;
                if (rep.witness.empty())
                    rep.witness = "B[" + std::to_string(i) + "][" + std::to_string(j) + "] != -B[j][i]";
                break;
            }

    Poly ec = m.N.dot_x();
    rep.energy_conserving = ec.empty();
    if (!ec.empty() && rep.witness.empty())
        rep.witness = "N(x).x has term " + poly_to_string(Poly{*ec.begin()});

    Poly dv = m.N.divergence();
    rep.divergence_free = dv.empty();
    if (!dv.empty() && rep.witness.empty())
        rep.witness = "div N has term " + poly_to_string(Poly{*dv.begin()});

    auto hd = m.N.homogeneous_degree();
    rep.homogeneous = hd.has_value();
    rep.degree_p = hd.value_or(-1);
    if (!rep.homogeneous && rep.witness.empty()) rep.witness = "N mixes total degrees";
    return rep;
}

Eigen::VectorXd drift_eval(const ModelSpec& m, const Eigen::VectorXd& x) { return m.drift(x); }

std::vector<PolyVectorField> noise_fields(const ModelSpec& m) {
    std::vector<PolyVectorField> out;
    out.reserve(m.Z.size());
    for (const auto& z : m.Z) out.push_back(PolyVectorField::constant(z));
    return out;
}

ModelSpec build_lorenz96(int n, const std::vector<Rat>& q, double epsilon, double alpha) {
    if (n < 4) throw ValidationError("lorenz96 requires n >= 4 (full advection stencil)");
    if (static_cast<int>(q.size()) != n) throw ValidationError("lorenz96 forcing vector must have length n");
    ModelSpec m;
    m.d = n;
    m.label = "lorenz96_n" + std::to_string(n);
    m.alpha = alpha;
    m.epsilon = epsilon;
    m.A.assign(n, std::vector<Rat>(n, 0));
    m.B.assign(n, std::vector<Rat>(n, 0));
    for (int i = 0; i < n; ++i) m.A[i][i] = 1;
    // drift convection term is (u_{m+1} - u_{m-2}) u_{m-1}, so the stored
    // nonlinearity is its negation
    m.N = PolyVectorField(n);
    auto mod = [n](int i) { return ((i % n) + n) % n; };
    for (int i = 0; i < n; ++i) {
        Monomial t1(n, 0);
        t1[mod(i + 1)] += 1;
        t1[mod(i - 1)] += 1;
        m.N.add_term(i, t1, Rat(-1));
        Monomial t2(n, 0);
        t2[mod(i - 2)] += 1;
        t2[mod(i - 1)] += 1;
        m.N.add_term(i, t2, Rat(1));
    }
    for (int i = 0; i < n; ++i) {
        if (q[i] == 0) continue;
        std::vector<Rat> z(n, 0);
        z[i] = q[i];
        m.Z.push_back(std::move(z));
    }
    m.finalize();
    return m;
}

ModelSpec build_sabra(int J, const Rat& delta_param, const std::vector<Rat>& q,
                      const std::vector<Rat>& p, double epsilon, double alpha) {
    if (J < 3) throw ValidationError("sabra requires J >= 3 shells");
    if (!(delta_param > 0 && delta_param < 2) || delta_param == 1)
        throw ValidationError("sabra shell parameter must lie in (0,2) excluding 1");
    if (static_cast<int>(q.size()) != J || static_cast<int>(p.size()) != J)
        throw ValidationError("sabra forcing vectors must have length J");
    const int d = 2 * J;
    ModelSpec m;
    m.d = d;
    m.label = "sabra_J" + std::to_string(J);
    m.alpha = alpha;
    m.epsilon = epsilon;
    m.A.assign(d, std::vector<Rat>(d, 0));
    m.B.assign(d, std::vector<Rat>(d, 0));
    auto ia = [](int shell) { return 2 * (shell - 1); };     // a_m index, shell 1-based
    auto ib = [](int shell) { return 2 * (shell - 1) + 1; }; // b_m index
    for (int s = 1; s <= J; ++s) {
        Rat diss = 1;
        for (int k = 0; k < s; ++k) diss *= 4;
        m.A[ia(s)][ia(s)] = diss;
        m.A[ib(s)][ib(s)] = diss;
    }
    m.N = PolyVectorField(d);
    const Rat& dl = delta_param;
    const Rat c2 = dl / 2, c3 = (1 - dl) / 4;
    auto add = [&](int comp, int v1, int v2, const Rat& coeff) {
        if (coeff == 0) return;
        Monomial mm(d, 0);
        mm[v1] += 1;
        mm[v2] += 1;
        m.N.add_term(comp, mm, coeff);
    };
    // N = -G where G is the energy-conserving quadratic interaction:
    //   G_a(m) = 2^m [ -(a_{m+1} b_{m+2} - b_{m+1} a_{m+2})
    //                  + (dl/2)(a_{m-1} b_{m+1} - b_{m-1} a_{m+1})
    //                  - ((1-dl)/4)(a_{m-2} b_{m-1} + b_{m-2} a_{m-1}) ]
    //   G_b(m) = 2^m [  (a_{m+1} a_{m+2} + b_{m+1} b_{m+2})
    //                  - (dl/2)(a_{m-1} a_{m+1} + b_{m-1} b_{m+1})
    //                  + ((1-dl)/4)(a_{m-2} a_{m-1} - b_{m-2} b_{m-1}) ]
    // with shells outside 1..J set to zero.
    for (int s = 1; s <= J; ++s) {
        Rat w = 1;
        for (int k = 0; k < s; ++k) w *= 2;
        if (s + 2 <= J) {
            add(ia(s), ia(s + 1), ib(s + 2), w);
            add(ia(s), ib(s + 1), ia(s + 2), -w);
            add(ib(s), ia(s + 1), ia(s + 2), -w);
            add(ib(s), ib(s + 1), ib(s + 2), -w);
        }
        if (s - 1 >= 1 && s + 1 <= J) {
            add(ia(s), ia(s - 1), ib(s + 1), -w * c2);
            add(ia(s), ib(s - 1), ia(s + 1), w * c2);
            add(ib(s), ia(s - 1), ia(s + 1), w * c2);
            add(ib(s), ib(s - 1), ib(s + 1), w * c2);
        }
        if (s - 2 >= 1) {
            add(ia(s), ia(s - 2), ib(s - 1), w * c3);
            add(ia(s), ib(s - 2), ia(s - 1), w * c3);
            add(ib(s), ia(s - 2), ia(s - 1), -w * c3);
            add(ib(s), ib(s - 2), ib(s - 1), w * c3);
        }
    }
    for (int s = 1; s <= J; ++s) {
        if (q[s - 1] != 0) {
            std::vector<Rat> z(d, 0);
            z[ia(s)] = q[s - 1];
            m.Z.push_back(std::move(z));
        }
        if (p[s - 1] != 0) {
            std::vector<Rat> z(d, 0);
            z[ib(s)] = p[s - 1];
            m.Z.push_back(std::move(z));
        }
    }
    m.finalize();
    return m;
}

ModelSpec build_triad(const std::vector<Rat>& alphas, const Rat& q1, const Rat& q2,
                      double epsilon, double alpha) {
    if (alphas.size() != 3) throw ValidationError("triad requires exactly three couplings");
    if (alphas[0] + alphas[1] + alphas[2] != 0)
        throw ValidationError("triad couplings must sum to zero");
    if (alphas[2] == 0) throw ValidationError("triad coupling a3 must be nonzero");
    if (q1 == 0 || q2 == 0) throw ValidationError("triad noise amplitudes q1, q2 must be nonzero");
    ModelSpec m;
    m.d = 3;
    m.label = "triad";
    m.alpha = alpha;
    m.epsilon = epsilon;
    m.A.assign(3, std::vector<Rat>(3, 0));
    m.B.assign(3, std::vector<Rat>(3, 0));
    for (int i = 0; i < 3; ++i) m.A[i][i] = 1;
    m.N = PolyVectorField(3);
    m.N.add_term(0, Monomial{0, 1, 1}, alphas[0]);
    m.N.add_term(1, Monomial{1, 0, 1}, alphas[1]);
    m.N.add_term(2, Monomial{1, 1, 0}, alphas[2]);
    m.Z.push_back({q1, 0, 0});
    m.Z.push_back({0, q2, 0});
    m.finalize();
    return m;
}

ModelSpec build_ou(const std::vector<Rat>& a_diag, const std::vector<Rat>& z,
                   double epsilon, double alpha, double delta) {
    const int d = static_cast<int>(a_diag.size());
    if (d == 0) throw ValidationError("ou model needs at least one coordinate");
    if (static_cast<int>(z.size()) != d) throw ValidationError("ou noise vector must have length d");
    for (const Rat& a : a_diag)
        if (a <= 0) throw ValidationError("ou dissipation rates must be positive");
    ModelSpec m;
    m.d = d;
    m.label = "ou_d" + std::to_string(d);
    m.alpha = alpha;
    m.epsilon = epsilon;
    m.delta = delta;
    m.A.assign(d, std::vector<Rat>(d, 0));
    m.B.assign(d, std::vector<Rat>(d, 0));
    for (int i = 0; i < d; ++i) m.A[i][i] = a_diag[i];
    m.N = PolyVectorField(d);
    for (int i = 0; i < d; ++i) {
        if (z[i] == 0) continue;
        std::vector<Rat> zv(d, 0);
        zv[i] = z[i];
        m.Z.push_back(std::move(zv));
    }
    m.finalize();
    return m;
}

} // namespace hypomix
