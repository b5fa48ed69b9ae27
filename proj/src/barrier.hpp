// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "dual2.hpp"
#include "foldlab/mesh.hpp"

namespace foldlab::detail {

struct ContactPair {
  enum class Kind { PointTriangle, EdgeEdge };
  Kind kind;
  /// Point-triangle: (p, a, b, c). Edge-edge: (a0, a1, b0, b1).
  std::array<int, 4> verts;
};

/// Spatial-hash broad phase plus exact distance filter: all non-adjacent
/// point-triangle and edge-edge pairs closer than dhat.
std::vector<ContactPair> find_contact_pairs(const TriMesh& mesh, const State& x, double dhat);

/// Unsigned distance of a pair with derivatives in the 12 pair coordinates.
Dual2<12> pair_distance(const ContactPair& pair, const State& x);

double pair_distance_value(const ContactPair& pair, const State& x);

/// -kappa (d - dhat)^2 ln(d / dhat) for 0 < d < dhat.
template <class T>
T log_barrier(const T& d, double dhat, double kappa) {
  using std::log;
  const T diff = d - dhat;
  return (-kappa) * (diff * diff) * log(d * (1.0 / dhat));
}

}  // namespace foldlab::detail
