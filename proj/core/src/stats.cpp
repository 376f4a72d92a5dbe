#include "hypomix/stats.hpp"

#include <algorithm>
#include <cmath>

#include "hypomix/errors.hpp"
#include "hypomix/rng.hpp"

namespace hypomix {

double sample_mean(const std::vector<double>& xs) {
    if (xs.empty()) throw ValidationError("sample_mean: empty input");
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    const double m = sample_mean(xs);
    double s = 0.0;
    for (double v : xs) s += (v - m) * (v - m);
    return s / static_cast<double>(n - 1);
}

double mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) throw ValidationError("mean_stderr: empty input");
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

double integrated_autocorr_time(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 4) return 1.0;
    const double m = sample_mean(series);
    std::vector<double> c(n, 0.0);
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - m) * (series[i + lag] - m);
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return 1.0;
    double tau = 1.0;
    const std::size_t max_lag = n / 3;
    for (std::size_t k = 1; k + 1 <= max_lag; k += 2) {
        const double pair = (autocov(k) + autocov(k + 1)) / c0;
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    return std::max(tau, 1.0);
}

double batch_means_stderr(const std::vector<double>& series, int n_batches) {
    if (n_batches < 2) throw ValidationError("batch_means_stderr: need at least 2 batches");
    const std::size_t n = series.size();
    if (n < static_cast<std::size_t>(2 * n_batches))
        throw ValidationError("batch_means_stderr: series shorter than 2 points per batch");
    const std::size_t len = n / n_batches; // trailing remainder dropped
    std::vector<double> means(n_batches, 0.0);
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += series[b * len + i];
        means[b] = s / static_cast<double>(len);
    }
    return mean_stderr(means);
}

LinearFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("least_squares_fit: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("least_squares_fit: need at least 2 points");
    const double mx = sample_mean(x), my = sample_mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ValidationError("least_squares_fit: degenerate abscissa");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

Interval bootstrap_mean_ci(const std::vector<double>& xs, int n_resample, double level,
                           std::uint64_t seed) {
    if (xs.empty()) throw ValidationError("bootstrap_mean_ci: empty input");
    if (n_resample < 10) throw ValidationError("bootstrap_mean_ci: need at least 10 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap_mean_ci: level in (0,1)");
    const std::size_t n = xs.size();
    GaussianStream stream(seed, 0x626f6f74); // dedicated resampling stream
    std::vector<double> u(n);
    std::vector<double> means(n_resample);
    for (int b = 0; b < n_resample; ++b) {
        stream.fill_uniform(u.data(), n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto idx = static_cast<std::size_t>(u[i] * static_cast<double>(n));
            if (idx >= n) idx = n - 1; // u = 1 maps to the last element
            s += xs[idx];
        }
        means[b] = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double a = (1.0 - level) / 2.0;
    auto pick = [&](double q) {
        auto i = static_cast<std::size_t>(q * (n_resample - 1) + 0.5);
        return means[std::min<std::size_t>(i, n_resample - 1)];
    };
    return Interval{pick(a), pick(1.0 - a)};
}

} // namespace hypomix
