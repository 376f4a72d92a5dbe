#include "hypomix/gridscan.hpp"

#include <vector>

#include "hypomix/errors.hpp"

namespace hypomix {

double radical_inverse(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

namespace {
constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                           41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
}

void scan_cube(int d, double R, int pts, const std::function<void(const Eigen::VectorXd&)>& fn,
               int nquasi) {
    if (d <= 0) throw ValidationError("scan_cube: dimension must be positive");
    Eigen::VectorXd x(d);
    if (d <= 5) {
        std::vector<int> ix(d, 0);
        const double step = (pts > 1) ? 2.0 * R / (pts - 1) : 0.0;
        while (true) {
            for (int k = 0; k < d; ++k) x[k] = -R + step * ix[k];
            fn(x);
            int k = 0;
            while (k < d && ++ix[k] == pts) ix[k++] = 0;
            if (k == d) break;
        }
    } else {
        if (d > 24) throw ValidationError("scan_cube: dimension too large for the Halton bases");
        for (std::uint64_t i = 1; i <= static_cast<std::uint64_t>(nquasi); ++i) {
            for (int k = 0; k < d; ++k) x[k] = -R + 2.0 * R * radical_inverse(i, kPrimes[k]);
            fn(x);
        }
    }
}

long scan_cube_count(int d, int pts, int nquasi) {
    if (d <= 5) {
        long n = 1;
        for (int k = 0; k < d; ++k) n *= pts;
        return n;
    }
    return nquasi;
}

} // namespace hypomix
