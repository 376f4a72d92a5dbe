#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypomix/bracket.hpp"
#include "hypomix/model.hpp"

namespace hypomix {

/// Grid-certified spanning proof: the frame fields (members of V_{N0})
/// keep |det| >= min_abs_det at every scanned node of [-R, R]^d, and
/// c0 = 1 / min_abs_det bounds the inverse determinant uniformly.
struct BracketCertificate {
    int level_n0 = 0;                     ///< smallest level whose span passes
    std::vector<std::vector<int>> frame;  ///< d generating multi-indices
    double grid_radius = 0.0;
    int grid_points = 0;                  ///< per axis; quasi-random scan when d > 5
    long grid_nodes = 0;                  ///< total nodes scanned (origin included)
    double min_abs_det = 0.0;             ///< worst-node |det| of the frame
    double c0 = 0.0;
    std::vector<std::pair<double, double>> epsilon_pairs; ///< filled by assumption2_check
    bool identical_across_eps = true;     ///< frame and constants equal for all pairs
    std::string model_label;
};

/// Where and how badly the span degenerated.
struct SpanFailure {
    Eigen::VectorXd node;
    int achieved_rank = 0;
};

struct SpanningResult {
    std::optional<BracketCertificate> certificate;
    std::optional<SpanFailure> failure;
    bool ok() const { return certificate.has_value(); }
};

/// Scan the cube (tensor grid for d <= 5, 10^4 quasi-random nodes plus the
/// origin otherwise), select d fields per node greedily by column-pivoted
/// orthogonalization (ties: lower depth, then lexicographic multi-index),
/// and certify the minimum over nodes of the best |det|. The reported frame
/// is the per-node winner whose worst-node determinant is largest.
SpanningResult spanning_check(const Filtration& filt, double R, int grid_points);

/// Run generate_filtration + spanning_check with drift N + e1 Ax + e2 Bx for
/// every (e1, e2) in {0, 1/2, 1}^2 and with N alone; return the worst
/// certificate and record whether frame and constants agreed across runs.
/// Throws on any spanning failure (with the failing node in the message).
BracketCertificate assumption2_check(const ModelSpec& model, double R, int grid_points = 9,
                                     int depth = 6);

/// JSON document for persistence (model label, level, frame, grid, c0, pairs).
std::string certificate_to_json(const BracketCertificate& cert);

} // namespace hypomix
