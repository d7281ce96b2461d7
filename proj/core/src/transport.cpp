#include "msa/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msa/errors.hpp"

namespace msa::ot {

Matrix cost_matrix(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) {
    std::ostringstream os;
    os << "cost_matrix: column mismatch (" << x.cols() << " vs " << y.cols() << ")";
    throw ValidationError(os.str());
  }
  Matrix c(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      c(i, j) = (x.row(i) - y.row(j)).squaredNorm();
    }
  }
  return c;
}

TransportPlan::TransportPlan(Matrix pi, double tolerance) : pi_(std::move(pi)) {
  if (pi_.rows() == 0 || pi_.cols() == 0) throw ValidationError("TransportPlan: empty plan");
  if (!pi_.allFinite() || pi_.minCoeff() < 0.0) {
    throw ValidationError("TransportPlan: entries must be finite and nonnegative");
  }
  const double residual = marginal_residual();
  if (residual > tolerance) {
    std::ostringstream os;
    os << "TransportPlan: marginal residual " << residual << " exceeds " << tolerance;
    throw ValidationError(os.str());
  }
}

TransportPlan TransportPlan::from_assignment(const std::vector<Index>& target) {
  const auto n = static_cast<Index>(target.size());
  Matrix pi = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const Index j = target[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n) throw ValidationError("TransportPlan: assignment out of range");
    pi(i, j) += 1.0 / static_cast<double>(n);
  }
  return TransportPlan(std::move(pi));
}

double TransportPlan::marginal_residual() const {
  const double row_target = 1.0 / static_cast<double>(pi_.rows());
  const double col_target = 1.0 / static_cast<double>(pi_.cols());
  const double rows = (pi_.rowwise().sum().array() - row_target).abs().maxCoeff();
  const double cols = (pi_.colwise().sum().array() - col_target).abs().maxCoeff();
  return std::max(rows, cols);
}

Index TransportPlan::support_size() const { return (pi_.array() > 0.0).count(); }

// Node layout: sources 0..n-1, sinks n..n+m-1, artificial root n+m.
// Arc layout: real arc (i, j) has id i*m + j and runs i -> n+j; the
// artificial arc of node k has id n*m + k and runs k -> root for sources and
// root -> k for sinks.

std::int64_t NetworkSimplex::arc_tail(std::int64_t arc) const {
  const std::int64_t real = n_ * m_;
  if (arc < real) return arc / m_;
  const std::int64_t node = arc - real;
  return node < n_ ? node : n_ + m_;
}

std::int64_t NetworkSimplex::arc_head(std::int64_t arc) const {
  const std::int64_t real = n_ * m_;
  if (arc < real) return n_ + arc % m_;
  const std::int64_t node = arc - real;
  return node < n_ ? n_ + m_ : node;
}

double NetworkSimplex::arc_cost(std::int64_t arc, const std::vector<double>& costs) const {
  return arc < n_ * m_ ? costs[static_cast<std::size_t>(arc)] : artificial_cost_;
}

void NetworkSimplex::reset() {
  n_ = 0;
  m_ = 0;
}

void NetworkSimplex::initialize(Index n, Index m) {
  n_ = n;
  m_ = m;
  const std::int64_t nodes = n + m + 1;
  const std::int64_t arcs = n * m + n + m;
  flow_.assign(static_cast<std::size_t>(arcs), 0);
  in_tree_.assign(static_cast<std::size_t>(arcs), 0);
  tree_arcs_.clear();
  for (std::int64_t k = 0; k < n + m; ++k) {
    const std::int64_t arc = n * m + k;
    flow_[static_cast<std::size_t>(arc)] = k < n ? m : n;
    in_tree_[static_cast<std::size_t>(arc)] = 1;
    tree_arcs_.push_back(arc);
  }
  parent_.assign(static_cast<std::size_t>(nodes), -1);
  parent_arc_.assign(static_cast<std::size_t>(nodes), -1);
  depth_.assign(static_cast<std::size_t>(nodes), 0);
  potential_.assign(static_cast<std::size_t>(nodes), 0.0);
  next_arc_ = 0;
}

void NetworkSimplex::attach(std::int64_t child, std::int64_t parent, std::int64_t arc,
                           const std::vector<double>& costs) {
  const auto cs = static_cast<std::size_t>(child);
  const auto ps = static_cast<std::size_t>(parent);
  parent_[cs] = parent;
  parent_arc_[cs] = arc;
  depth_[cs] = depth_[ps] + 1;
  // reduced cost c + pot[tail] - pot[head] vanishes on tree arcs
  const double c = arc_cost(arc, costs);
  potential_[cs] = arc_tail(arc) == parent ? potential_[ps] + c : potential_[ps] - c;
}

void NetworkSimplex::rebuild_tree(const std::vector<double>& costs) {
  const std::int64_t nodes = n_ + m_ + 1;
  const std::int64_t root = n_ + m_;
  adjacency_.assign(static_cast<std::size_t>(nodes), {});
  for (std::int64_t arc : tree_arcs_) {
    adjacency_[static_cast<std::size_t>(arc_tail(arc))].push_back(arc);
    adjacency_[static_cast<std::size_t>(arc_head(arc))].push_back(arc);
  }
  std::vector<std::int64_t> queue;
  queue.reserve(static_cast<std::size_t>(nodes));
  std::fill(parent_.begin(), parent_.end(), -1);
  parent_[static_cast<std::size_t>(root)] = root;
  parent_arc_[static_cast<std::size_t>(root)] = -1;
  depth_[static_cast<std::size_t>(root)] = 0;
  potential_[static_cast<std::size_t>(root)] = 0.0;
  queue.push_back(root);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::int64_t x = queue[head];
    for (std::int64_t arc : adjacency_[static_cast<std::size_t>(x)]) {
      const std::int64_t tail = arc_tail(arc);
      const std::int64_t y = tail == x ? arc_head(arc) : tail;
      if (parent_[static_cast<std::size_t>(y)] != -1) continue;
      attach(y, x, arc, costs);
      queue.push_back(y);
    }
  }
  if (static_cast<std::int64_t>(queue.size()) != nodes) {
    throw NumericalError("network simplex: basis is not a spanning tree");
  }
}

void NetworkSimplex::update_tree(std::int64_t entering, std::int64_t leaving,
                                 const std::vector<double>& costs) {
  *std::find(tree_arcs_.begin(), tree_arcs_.end(), leaving) = entering;
  for (std::int64_t node : {arc_tail(leaving), arc_head(leaving)}) {
    auto& list = adjacency_[static_cast<std::size_t>(node)];
    list.erase(std::find(list.begin(), list.end(), leaving));
  }
  adjacency_[static_cast<std::size_t>(arc_tail(entering))].push_back(entering);
  adjacency_[static_cast<std::size_t>(arc_head(entering))].push_back(entering);

  // the endpoint of `leaving` below it roots the detached subtree
  const std::int64_t lt = arc_tail(leaving);
  const std::int64_t cut = parent_arc_[static_cast<std::size_t>(lt)] == leaving ? lt
                                                                                 : arc_head(leaving);
  std::int64_t inside = arc_tail(entering);
  std::int64_t outside = arc_head(entering);
  bool found = false;
  for (std::int64_t x = inside;; x = parent_[static_cast<std::size_t>(x)]) {
    if (x == cut) {
      found = true;
      break;
    }
    if (parent_[static_cast<std::size_t>(x)] == x) break;  // reached the root
  }
  if (!found) std::swap(inside, outside);

  std::vector<std::int64_t> queue{inside};
  attach(inside, outside, entering, costs);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::int64_t x = queue[head];
    const std::int64_t up = parent_arc_[static_cast<std::size_t>(x)];
    for (std::int64_t arc : adjacency_[static_cast<std::size_t>(x)]) {
      if (arc == up) continue;
      const std::int64_t tail = arc_tail(arc);
      const std::int64_t y = tail == x ? arc_head(arc) : tail;
      attach(y, x, arc, costs);
      queue.push_back(y);
    }
  }
}

TransportPlan NetworkSimplex::solve(const Matrix& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  if (n == 0 || m == 0) throw ValidationError("solve_ot: empty cost matrix");
  if (!cost.allFinite()) throw ValidationError("solve_ot: cost matrix has non-finite entries");

  if (n != n_ || m != m_) initialize(n, m);

  std::vector<double> costs(static_cast<std::size_t>(n * m));
  double max_abs = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double c = cost(i, j);
      costs[static_cast<std::size_t>(i * m + j)] = c;
      max_abs = std::max(max_abs, std::abs(c));
    }
  }
  artificial_cost_ = (max_abs + 1.0) * static_cast<double>(n + m);
  const double tolerance = 1e-12 * (max_abs + 1.0) * static_cast<double>(n + m);

  rebuild_tree(costs);

  const std::int64_t real_arcs = n * m;
  const auto block = std::max<std::int64_t>(
      10, static_cast<std::int64_t>(std::sqrt(static_cast<double>(real_arcs))));
  const long max_pivots = 20L * real_arcs + 10000L;
  long pivots = 0;

  auto reduced = [&](std::int64_t arc) {
    const std::int64_t i = arc / m;
    const std::int64_t j = n + arc % m;
    return costs[static_cast<std::size_t>(arc)] + potential_[static_cast<std::size_t>(i)] -
           potential_[static_cast<std::size_t>(j)];
  };

  // Candidate-list pricing: a scan collects violating arcs block by block;
  // later pivots re-price only that list until it runs dry.
  std::vector<std::int64_t> candidates;
  const auto max_minor = static_cast<std::size_t>(block);
  std::size_t minor = 0;

  for (;;) {
    std::int64_t entering = -1;
    double best = -tolerance;
    if (!candidates.empty() && minor < max_minor) {
      std::size_t keep = 0;
      for (std::int64_t cand : candidates) {
        const double rc = reduced(cand);
        if (rc < -tolerance) {
          candidates[keep++] = cand;
          if (rc < best) {
            best = rc;
            entering = cand;
          }
        }
      }
      candidates.resize(keep);
      ++minor;
    }
    if (entering < 0) {
      candidates.clear();
      minor = 0;
      std::int64_t scanned = 0;
      std::int64_t in_block = 0;
      std::int64_t arc = next_arc_;
      const double* sink_potential = potential_.data() + n;
      while (scanned < real_arcs) {
        const std::int64_t i = arc / m;
        const std::int64_t j0 = arc % m;
        const std::int64_t len = std::min({m - j0, block - in_block, real_arcs - scanned});
        const double* c = costs.data() + arc;
        const double* ps = sink_potential + j0;
        const double pu = potential_[static_cast<std::size_t>(i)];
        for (std::int64_t k = 0; k < len; ++k) {
          const double rc = c[k] + pu - ps[k];
          if (rc < -tolerance) {
            candidates.push_back(arc + k);
            if (rc < best) {
              best = rc;
              entering = arc + k;
            }
          }
        }
        scanned += len;
        in_block += len;
        arc += len;
        if (arc == real_arcs) arc = 0;
        if (in_block == block) {
          if (entering >= 0) break;
          in_block = 0;
        }
      }
      next_arc_ = arc;
      if (entering < 0) break;
    }

    if (++pivots > max_pivots) {
      std::ostringstream os;
      os << "solve_ot: network simplex exceeded " << max_pivots << " pivots (best reduced cost "
         << best << ")";
      throw ConvergenceError(os.str(), Matrix(), best);
    }

    const std::int64_t u = arc_tail(entering);
    const std::int64_t v = arc_head(entering);

    // apex of the cycle
    std::int64_t a = u;
    std::int64_t b = v;
    while (a != b) {
      if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)]) {
        a = parent_[static_cast<std::size_t>(a)];
      } else {
        b = parent_[static_cast<std::size_t>(b)];
      }
    }
    const std::int64_t join = a;

    // Leaving arc: last blocking arc met when walking the cycle from the apex
    // in the direction of flow (join -> u, u -> v, v -> join).
    std::int64_t delta = -1;
    std::int64_t leaving = -1;
    for (std::int64_t x = u; x != join; x = parent_[static_cast<std::size_t>(x)]) {
      const std::int64_t t = parent_arc_[static_cast<std::size_t>(x)];
      if (arc_tail(t) == x) {  // points up, flow decreases
        const std::int64_t f = flow_[static_cast<std::size_t>(t)];
        if (leaving < 0 || f < delta) {
          delta = f;
          leaving = t;
        }
      }
    }
    for (std::int64_t x = v; x != join; x = parent_[static_cast<std::size_t>(x)]) {
      const std::int64_t t = parent_arc_[static_cast<std::size_t>(x)];
      if (arc_head(t) == x) {  // points down, flow decreases
        const std::int64_t f = flow_[static_cast<std::size_t>(t)];
        if (leaving < 0 || f <= delta) {
          delta = f;
          leaving = t;
        }
      }
    }
    if (leaving < 0) throw NumericalError("solve_ot: unbounded pivot cycle");

    if (delta > 0) {
      for (std::int64_t x = u; x != join; x = parent_[static_cast<std::size_t>(x)]) {
        const std::int64_t t = parent_arc_[static_cast<std::size_t>(x)];
        flow_[static_cast<std::size_t>(t)] += arc_tail(t) == x ? -delta : delta;
      }
      for (std::int64_t x = v; x != join; x = parent_[static_cast<std::size_t>(x)]) {
        const std::int64_t t = parent_arc_[static_cast<std::size_t>(x)];
        flow_[static_cast<std::size_t>(t)] += arc_head(t) == x ? -delta : delta;
      }
    }
    flow_[static_cast<std::size_t>(entering)] = delta;

    in_tree_[static_cast<std::size_t>(leaving)] = 0;
    in_tree_[static_cast<std::size_t>(entering)] = 1;
    update_tree(entering, leaving, costs);
  }
  last_pivots_ = pivots;

  for (std::int64_t k = 0; k < n + m; ++k) {
    if (flow_[static_cast<std::size_t>(real_arcs + k)] != 0) {
      throw NumericalError("solve_ot: artificial flow left at optimum (infeasible problem)");
    }
  }

  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
  Matrix pi = Matrix::Zero(n, m);
  for (std::int64_t t : tree_arcs_) {
    if (t < real_arcs && flow_[static_cast<std::size_t>(t)] > 0) {
      pi(t / m, t % m) = static_cast<double>(flow_[static_cast<std::size_t>(t)]) * scale;
    }
  }
  return TransportPlan(std::move(pi));
}

TransportPlan solve_ot(const Matrix& cost) {
  NetworkSimplex solver;
  return solver.solve(cost);
}

double ot_loss(const Matrix& cost, const TransportPlan& plan) {
  if (cost.rows() != plan.rows() || cost.cols() != plan.cols()) {
    throw ValidationError("ot_loss: shape mismatch between cost and plan");
  }
  return (cost.array() * plan.matrix().array()).sum();
}

}  // namespace msa::ot
