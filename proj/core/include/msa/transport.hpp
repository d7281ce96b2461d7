#pragma once

// Exact discrete optimal transport with uniform marginals.

#include <cstdint>
#include <vector>

#include "msa/types.hpp"

namespace msa::ot {

/// C_ij = ||x_i - y_j||^2 between the rows of `x` (n x q) and `y` (m x q).
Matrix cost_matrix(const Matrix& x, const Matrix& y);

/// Coupling with uniform marginals: rows sum to 1/n, columns to 1/m.
class TransportPlan {
 public:
  /// Throws ValidationError on negative entries or marginals off by more than
  /// `tolerance`.
  explicit TransportPlan(Matrix pi, double tolerance = 1e-9);

  /// The plan (1/n) P for a permutation-like assignment target[i] (n == m).
  static TransportPlan from_assignment(const std::vector<Index>& target);

  const Matrix& matrix() const { return pi_; }
  Index rows() const { return pi_.rows(); }
  Index cols() const { return pi_.cols(); }

  /// Largest absolute deviation of a row or column sum from its target.
  double marginal_residual() const;
  Index support_size() const;

 private:
  Matrix pi_;
};

/// Network simplex for the uniform-marginal transportation problem. Supplies
/// and demands are scaled to integers (m per source, n per sink) so flows are
/// exact; the solver works on a strongly feasible spanning tree rooted at an
/// artificial node, which rules out cycling on degenerate pivots.
///
/// Consecutive calls with the same shape restart from the previous optimal
/// basis, which stays primal feasible when only the costs change.
class NetworkSimplex {
 public:
  TransportPlan solve(const Matrix& cost);

  /// Pivots performed by the last call to solve().
  long last_pivots() const { return last_pivots_; }
  /// Clears the warm-start basis.
  void reset();

 private:
  void initialize(Index n, Index m);
  void rebuild_tree(const std::vector<double>& costs);
  /// Swaps `leaving` for `entering` and re-hangs the detached subtree.
  void update_tree(std::int64_t entering, std::int64_t leaving, const std::vector<double>& costs);
  /// Sets parent, depth and potential of `child` reached from `parent` by `arc`.
  void attach(std::int64_t child, std::int64_t parent, std::int64_t arc,
              const std::vector<double>& costs);
  double arc_cost(std::int64_t arc, const std::vector<double>& costs) const;
  std::int64_t arc_tail(std::int64_t arc) const;
  std::int64_t arc_head(std::int64_t arc) const;

  Index n_ = 0;
  Index m_ = 0;
  double artificial_cost_ = 0.0;
  std::vector<std::int64_t> flow_;
  std::vector<std::uint8_t> in_tree_;
  std::vector<std::int64_t> tree_arcs_;
  std::vector<std::vector<std::int64_t>> adjacency_;  ///< tree arcs per node
  std::vector<std::int64_t> parent_;
  std::vector<std::int64_t> parent_arc_;
  std::vector<std::int64_t> depth_;
  std::vector<double> potential_;
  std::int64_t next_arc_ = 0;
  long last_pivots_ = 0;
};

/// Exact minimizer of <C, pi> over plans with uniform marginals.
TransportPlan solve_ot(const Matrix& cost);

/// <C, pi> = tr(C^T pi)
double ot_loss(const Matrix& cost, const TransportPlan& plan);

}  // namespace msa::ot
