#pragma once

#include <netlasso/types.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace netlasso {

/// Undirected edge {i, j}, always stored with i < j.
struct Edge {
  Index i = 0;
  Index j = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Weighted undirected graph on vertices 0..n-1. The edge list is sorted
/// lexicographically and that order fixes the block layout of D x.
template <typename Scalar>
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Validates and sorts. Throws std::invalid_argument on self-loops,
  /// duplicates, out-of-range vertices, or negative weights.
  WeightedGraph(Index n, std::vector<Edge> edges, std::vector<Scalar> weights)
      : n_(n) {
    if (n < 0) throw std::invalid_argument("graph: negative vertex count");
    if (edges.size() != weights.size())
      throw std::invalid_argument("graph: edge and weight counts differ");
    std::vector<std::size_t> order(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      auto& e = edges[k];
      if (e.i == e.j)
        throw std::invalid_argument("graph: self-loop at vertex " + std::to_string(e.i));
      if (e.i > e.j) std::swap(e.i, e.j);
      if (e.i < 0 || e.j >= n)
        throw std::invalid_argument("graph: vertex index out of range");
      if (!(weights[k] >= Scalar(0)) || !std::isfinite(double(weights[k])))
        throw std::invalid_argument("graph: weights must be finite and non-negative");
      order[k] = k;
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
    edges_.reserve(edges.size());
    weights_.reserve(edges.size());
    for (std::size_t k : order) {
      if (!edges_.empty() && edges_.back() == edges[k])
        throw std::invalid_argument("graph: duplicate edge {" + std::to_string(edges[k].i) +
                                    "," + std::to_string(edges[k].j) + "}");
      edges_.push_back(edges[k]);
      weights_.push_back(weights[k]);
    }
  }

  Index num_vertices() const { return n_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Scalar>& weights() const { return weights_; }
  const Edge& edge(Index k) const { return edges_[static_cast<std::size_t>(k)]; }
  Scalar weight(Index k) const { return weights_[static_cast<std::size_t>(k)]; }

  /// Weight of {i, j}; 0 when the pair is not an edge.
  Scalar weight_between(Index i, Index j) const {
    if (i == j) return Scalar(0);
    Edge key{std::min(i, j), std::max(i, j)};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || !(*it == key)) return Scalar(0);
    return weights_[static_cast<std::size_t>(it - edges_.begin())];
  }

  /// True when the edges are exactly {k, k+1} for k = 0..n-2.
  bool is_path() const {
    if (n_ < 2 || num_edges() != n_ - 1) return false;
    for (Index k = 0; k < num_edges(); ++k)
      if (edges_[k].i != k || edges_[k].j != k + 1) return false;
    return true;
  }

  bool has_uniform_weights(Scalar value = Scalar(1)) const {
    return std::all_of(weights_.begin(), weights_.end(),
                       [&](Scalar w) { return w == value; });
  }

  /// Copy with every weight replaced by `value`.
  WeightedGraph with_uniform_weights(Scalar value = Scalar(1)) const {
    WeightedGraph g = *this;
    std::fill(g.weights_.begin(), g.weights_.end(), value);
    return g;
  }

 private:
  Index n_ = 0;
  std::vector<Edge> edges_;
  std::vector<Scalar> weights_;
};

/// exp(-alpha ||a_i - a_j||^2) for rows i, j of `points`.
template <typename Scalar, typename Derived>
Scalar gaussian_weight(const Eigen::MatrixBase<Derived>& points, Index i, Index j, Scalar alpha) {
  return std::exp(-alpha * (points.row(i) - points.row(j)).squaredNorm());
}

/// Complete graph with unit weights.
template <typename Scalar = double>
WeightedGraph<Scalar> build_complete(Index n) {
  if (n < 1) throw std::invalid_argument("build_complete: n must be at least 1");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) edges.push_back({i, j});
  std::vector<Scalar> w(edges.size(), Scalar(1));
  return WeightedGraph<Scalar>(n, std::move(edges), std::move(w));
}

/// Complete graph with Gaussian weights exp(-alpha ||a_i - a_j||^2).
template <typename Derived>
WeightedGraph<typename Derived::Scalar> build_complete_gaussian(
    const Eigen::MatrixBase<Derived>& points, typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.rows();
  if (n < 1) throw std::invalid_argument("build_complete_gaussian: no points");
  if (!(alpha > Scalar(0))) throw std::invalid_argument("build_complete_gaussian: alpha must be positive");
  std::vector<Edge> edges;
  std::vector<Scalar> w;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      edges.push_back({i, j});
      w.push_back(gaussian_weight(points, i, j, alpha));
    }
  return WeightedGraph<Scalar>(n, std::move(edges), std::move(w));
}

/// Indices of the k nearest neighbours of every point (self excluded);
/// distance ties are broken by the smaller index.
template <typename Derived>
std::vector<std::vector<Index>> nearest_neighbors(const Eigen::MatrixBase<Derived>& points, Index k) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.rows();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  std::vector<std::pair<Scalar, Index>> cand;
  for (Index i = 0; i < n; ++i) {
    cand.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) cand.emplace_back((points.row(i) - points.row(j)).squaredNorm(), j);
    const auto kk = static_cast<std::ptrdiff_t>(std::min<Index>(k, n - 1));
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
    auto& nn = out[static_cast<std::size_t>(i)];
    for (std::ptrdiff_t t = 0; t < kk; ++t) nn.push_back(cand[static_cast<std::size_t>(t)].second);
  }
  return out;
}

/// Edge {i, j} with weight exp(-alpha ||a_i - a_j||^2) whenever i is among the
/// k nearest neighbours of j or j among those of i. k >= n-1 yields the
/// complete Gaussian graph.
template <typename Derived>
WeightedGraph<typename Derived::Scalar> build_knn_gaussian(
    const Eigen::MatrixBase<Derived>& points, Index k, typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.rows();
  if (n < 1) throw std::invalid_argument("build_knn_gaussian: no points");
  if (k < 1) throw std::invalid_argument("build_knn_gaussian: k must be at least 1");
  if (!(alpha > Scalar(0))) throw std::invalid_argument("build_knn_gaussian: alpha must be positive");
  if (k >= n - 1) return build_complete_gaussian(points, alpha);

  const auto nn = nearest_neighbors(points, k);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j : nn[static_cast<std::size_t>(i)]) edges.push_back({std::min(i, j), std::max(i, j)});
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<Scalar> w;
  w.reserve(edges.size());
  for (const auto& e : edges) w.push_back(gaussian_weight(points, e.i, e.j, alpha));
  return WeightedGraph<Scalar>(n, std::move(edges), std::move(w));
}

/// Chain 0-1-...-(n-1) with unit weights.
template <typename Scalar = double>
WeightedGraph<Scalar> build_path(Index n) {
  if (n < 2) throw std::invalid_argument("build_path: n must be at least 2");
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  std::vector<Scalar> w(edges.size(), Scalar(1));
  return WeightedGraph<Scalar>(n, std::move(edges), std::move(w));
}

/// Matrix-free edge-difference operator: (D x)_k = x_i - x_j for edge k = {i, j}.
template <typename Scalar>
class DifferenceOperator {
 public:
  DifferenceOperator(const WeightedGraph<Scalar>& graph, Index p) : graph_(&graph), p_(p) {
    if (p < 1) throw std::invalid_argument("DifferenceOperator: block dimension must be positive");
  }

  const WeightedGraph<Scalar>& graph() const { return *graph_; }
  Index block_dim() const { return p_; }
  Index num_blocks() const { return graph_->num_edges(); }
  Index domain_dim() const { return graph_->num_vertices() * p_; }

  template <typename Derived>
  BlockVector<Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
    check_domain(x);
    BlockVector<Scalar> z(num_blocks(), p_);
    const auto& edges = graph_->edges();
    for (Index k = 0; k < num_blocks(); ++k) z.row(k) = x.row(edges[k].i) - x.row(edges[k].j);
    return z;
  }

  /// Exact adjoint: node i accumulates +z_k for edges {i, .} and -z_k for {., i}.
  template <typename Derived>
  CentroidMatrix<Scalar> apply_transpose(const Eigen::MatrixBase<Derived>& z) const {
    if (z.rows() != num_blocks() || z.cols() != p_)
      throw std::invalid_argument("DifferenceOperator: block vector has wrong shape");
    CentroidMatrix<Scalar> x = CentroidMatrix<Scalar>::Zero(graph_->num_vertices(), p_);
    const auto& edges = graph_->edges();
    for (Index k = 0; k < num_blocks(); ++k) {
      x.row(edges[k].i) += z.row(k);
      x.row(edges[k].j) -= z.row(k);
    }
    return x;
  }

  /// Dense (p m) x (n p) matrix; intended for tests on small graphs.
  Matrix<Scalar> dense() const {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(num_blocks() * p_, domain_dim());
    const auto& edges = graph_->edges();
    for (Index k = 0; k < num_blocks(); ++k)
      for (Index c = 0; c < p_; ++c) {
        d(k * p_ + c, edges[k].i * p_ + c) = Scalar(1);
        d(k * p_ + c, edges[k].j * p_ + c) = Scalar(-1);
      }
    return d;
  }

  /// D^T D as a sparse N x N matrix (graph Laplacian Kronecker I_p).
  Eigen::SparseMatrix<Scalar> gram_domain() const {
    const Index n = graph_->num_vertices();
    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(static_cast<std::size_t>(4 * num_blocks() * p_));
    for (const auto& e : graph_->edges())
      for (Index c = 0; c < p_; ++c) {
        const Index a = e.i * p_ + c, b = e.j * p_ + c;
        trip.emplace_back(a, a, Scalar(1));
        trip.emplace_back(b, b, Scalar(1));
        trip.emplace_back(a, b, Scalar(-1));
        trip.emplace_back(b, a, Scalar(-1));
      }
    Eigen::SparseMatrix<Scalar> l(n * p_, n * p_);
    l.setFromTriplets(trip.begin(), trip.end());
    return l;
  }

 private:
  template <typename Derived>
  void check_domain(const Eigen::MatrixBase<Derived>& x) const {
    if (x.rows() != graph_->num_vertices() || x.cols() != p_)
      throw std::invalid_argument("DifferenceOperator: centroid matrix has wrong shape");
  }

  const WeightedGraph<Scalar>* graph_;
  Index p_;
};

/// Disjoint-set forest with path halving.
class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<Index> parent_;
};

enum class SigmaMethod { automatic, eigensolve };

namespace detail {

// m x m edge Gram matrix B B^T of the unweighted incidence matrix B.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> edge_gram(const WeightedGraph<Scalar>& g) {
  const Index n = g.num_vertices(), m = g.num_edges();
  std::vector<Eigen::Triplet<Scalar>> trip;
  for (Index k = 0; k < m; ++k) {
    trip.emplace_back(k, g.edge(k).i, Scalar(1));
    trip.emplace_back(k, g.edge(k).j, Scalar(-1));
  }
  Eigen::SparseMatrix<Scalar> b(m, n);
  b.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<Scalar> gram = b * b.transpose();
  return gram;
}

}  // namespace detail

/// lambda_min(D D^T). The block structure does not change the spectrum, so
/// this is computed on the m x m edge Gram matrix. Returns 0 whenever D is
/// not surjective (the graph has a cycle or no edges).
template <typename Scalar>
Scalar sigma_min_DDt(const WeightedGraph<Scalar>& g, SigmaMethod method = SigmaMethod::automatic) {
  const Index n = g.num_vertices(), m = g.num_edges();
  if (m == 0) return Scalar(0);
  if (method == SigmaMethod::automatic) {
    if (g.is_path())
      return Scalar(2) * (Scalar(1) - std::cos(std::numbers::pi_v<Scalar> / Scalar(n)));
    if (m > n - 1) return Scalar(0);
    UnionFind uf(n);
    for (const auto& e : g.edges())
      if (!uf.unite(e.i, e.j)) return Scalar(0);
  }
  const Eigen::SparseMatrix<Scalar> gram = detail::edge_gram(g);
  if (m <= 400 || method == SigmaMethod::eigensolve) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(Matrix<Scalar>(gram), Eigen::EigenvaluesOnly);
    return std::max(Scalar(0), es.eigenvalues()(0));
  }
  // Inverse iteration on the (positive definite) Gram matrix of a forest.
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return Scalar(0);
  Vector<Scalar> v = Vector<Scalar>::LinSpaced(m, Scalar(1), Scalar(2));
  v.normalize();
  Scalar rayleigh = v.dot(gram * v);
  for (int it = 0; it < 20000; ++it) {
    v = ldlt.solve(v);
    v.normalize();
    const Scalar next = v.dot(gram * v);
    const bool done = std::abs(next - rayleigh) <= Scalar(1e-15) * next;
    rayleigh = next;
    if (done) break;
  }
  return rayleigh;
}

}  // namespace netlasso
