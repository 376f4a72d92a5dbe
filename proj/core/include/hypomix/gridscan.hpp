#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace hypomix {

/// Radical-inverse (van der Corput) value of index in the given base.
double radical_inverse(std::uint64_t index, int base);

/// Visit scan nodes of the cube [-R, R]^d: the tensor grid with pts nodes
/// per axis when d <= 5, otherwise nquasi low-discrepancy (Halton) nodes.
/// Evaluation order is fixed, but callers must not depend on it (reductions
/// over nodes are min/max style and therefore order-independent).
void scan_cube(int d, double R, int pts, const std::function<void(const Eigen::VectorXd&)>& fn,
               int nquasi = 10000);

/// Total number of nodes scan_cube will visit.
long scan_cube_count(int d, int pts, int nquasi = 10000);

} // namespace hypomix
