#pragma once

#include <cstdint>
#include <vector>

namespace hypomix {

double sample_mean(const std::vector<double>& xs);

/// Unbiased sample variance; 0 when fewer than two points.
double sample_variance(const std::vector<double>& xs);

/// Standard error of the mean assuming independent draws.
double mean_stderr(const std::vector<double>& xs);

/// Integrated autocorrelation time in sample units, by the initial
/// positive sequence rule: consecutive autocorrelation pairs are summed
/// until a pair sum turns nonpositive. Returns at least 1.
double integrated_autocorr_time(const std::vector<double>& series);

/// Standard error of the series mean from nonoverlapping batch means;
/// robust to serial correlation up to the batch length scale.
double batch_means_stderr(const std::vector<double>& series, int n_batches = 20);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap confidence interval for the mean, driven by a
/// counter-based stream so results are reproducible.
Interval bootstrap_mean_ci(const std::vector<double>& xs, int n_resample = 1000,
                           double level = 0.95, std::uint64_t seed = 0);

} // namespace hypomix
