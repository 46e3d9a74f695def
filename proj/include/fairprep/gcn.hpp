#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fairprep/graph.hpp"
#include "fairprep/nn.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

/// Symmetric-normalized adjacency with self-loops:
/// A_hat = D^{-1/2} (A + I) D^{-1/2}. An isolated node keeps a diagonal
/// entry of exactly 1.
struct NormalizedAdjacency {
  SparseMatrix mat;
};

inline NormalizedAdjacency normalize_adjacency(const CreditGraph& g) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.node_count());
  auto index = g.id_index();
  Eigen::VectorXd degree = Eigen::VectorXd::Ones(n); // self-loop included
  for (const Edge& e : g.edges) {
    degree(static_cast<Eigen::Index>(index.at(e.a))) += 1.0;
    degree(static_cast<Eigen::Index>(index.at(e.b))) += 1.0;
  }
  const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) + 2 * g.edges.size());
  for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
  for (const Edge& e : g.edges) {
    const auto i = static_cast<Eigen::Index>(index.at(e.a));
    const auto j = static_cast<Eigen::Index>(index.at(e.b));
    const double w = inv_sqrt(i) * inv_sqrt(j);
    trip.emplace_back(i, j, w);
    trip.emplace_back(j, i, w);
  }
  NormalizedAdjacency out;
  out.mat.resize(n, n);
  out.mat.setFromTriplets(trip.begin(), trip.end());
  return out;
}

/// Three-layer GCN for binary node classification; ReLU between layers,
/// row-wise softmax on the output.
struct GcnModel {
  Eigen::MatrixXd w1, w2, w3;

  static GcnModel init(Eigen::Index in_dim, Eigen::Index h1, Eigen::Index h2, Rng& rng) {
    GcnModel m;
    m.w1 = nn::glorot(in_dim, h1, rng);
    m.w2 = nn::glorot(h1, h2, rng);
    m.w3 = nn::glorot(h2, 2, rng);
    return m;
  }
};

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.01;
  int hidden1 = 32;
  int hidden2 = 16;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  /// Appends the current sensitive tag as an extra input column. Ablation
  /// switch; the graph's stored feature matrix is never modified.
  bool sensitive_as_input = false;
};

/// Stratified train/test split over (group, label) cells. Cells with fewer
/// than two nodes cannot be stratified and fall back to a random coin per
/// node; those cells are reported so callers can record the fallback.
struct SplitResult {
  std::vector<NodeId> train_ids;
  std::vector<NodeId> test_ids;
  int fallback_cells = 0;
};

inline SplitResult split_nodes(const CreditGraph& g, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split_nodes: fraction must be in (0,1)");
  std::array<std::array<std::vector<std::size_t>, 2>, 2> cells;
  for (std::size_t i = 0; i < g.node_count(); ++i) cells[g.sensitive[i]][g.labels[i]].push_back(i);

  Rng rng(seed);
  SplitResult out;
  for (int tag = 0; tag < 2; ++tag) {
    for (int label = 0; label < 2; ++label) {
      auto rows = cells[tag][label];
      if (rows.empty()) continue;
      if (rows.size() < 2) {
        ++out.fallback_cells;
        for (std::size_t r : rows) {
          (rng.uniform() < fraction ? out.train_ids : out.test_ids).push_back(g.node_ids[r]);
        }
        continue;
      }
      rng.shuffle(rows);
      auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
      take = std::min(std::max<std::size_t>(take, 1), rows.size() - 1); // both sides nonempty per cell
      for (std::size_t j = 0; j < rows.size(); ++j)
        (j < take ? out.train_ids : out.test_ids).push_back(g.node_ids[rows[j]]);
    }
  }
  std::sort(out.train_ids.begin(), out.train_ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());
  return out;
}

struct TrainResult {
  GcnModel model;
  SplitResult split;
  std::vector<std::uint8_t> predicted;  // per node, graph row order
  Eigen::MatrixXd probabilities;        // n x 2, rows sum to 1
  std::vector<double> loss_curve;       // training cross-entropy per epoch
};

namespace detail {

inline Eigen::MatrixXd gcn_input(const CreditGraph& g, bool sensitive_as_input) {
  if (!sensitive_as_input) return g.features;
  Eigen::MatrixXd x(g.features.rows(), g.features.cols() + 1);
  x.leftCols(g.features.cols()) = g.features;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    x(static_cast<Eigen::Index>(i), g.features.cols()) = static_cast<double>(g.sensitive[i]);
  return x;
}

struct GcnForward {
  Eigen::MatrixXd sx, z1, h1, sh1, z2, h2, sh2, z3, probs;
};

inline GcnForward gcn_forward(const SparseMatrix& s, const Eigen::MatrixXd& x, const GcnModel& m) {
  GcnForward f;
  f.sx = s * x;
  f.z1 = f.sx * m.w1;
  f.h1 = nn::relu(f.z1);
  f.sh1 = s * f.h1;
  f.z2 = f.sh1 * m.w2;
  f.h2 = nn::relu(f.z2);
  f.sh2 = s * f.h2;
  f.z3 = f.sh2 * m.w3;
  f.probs = nn::softmax_rows(f.z3);
  return f;
}

/// Mean cross-entropy over masked rows and its gradients w.r.t. the three
/// weight matrices. Plain reverse-mode sweep through the layer stack.
struct GcnBackward {
  double loss;
  Eigen::MatrixXd dw1, dw2, dw3;
};

inline GcnBackward gcn_backward(const SparseMatrix& s, const GcnForward& f, const GcnModel& m,
                                const std::vector<std::uint8_t>& labels,
                                const std::vector<char>& in_train, std::size_t train_count) {
  const Eigen::Index n = f.probs.rows();
  GcnBackward b;
  b.loss = 0.0;
  Eigen::MatrixXd dz3 = Eigen::MatrixXd::Zero(n, 2);
  const double scale = 1.0 / static_cast<double>(train_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!in_train[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    b.loss -= std::log(std::max(f.probs(i, y), 1e-300)) * scale;
    dz3.row(i) = f.probs.row(i) * scale;
    dz3(i, y) -= scale;
  }
  b.dw3 = f.sh2.transpose() * dz3;
  Eigen::MatrixXd dh2 = s * (dz3 * m.w3.transpose());
  Eigen::MatrixXd dz2 = dh2.cwiseProduct(nn::relu_mask(f.z2));
  b.dw2 = f.sh1.transpose() * dz2;
  Eigen::MatrixXd dh1 = s * (dz2 * m.w2.transpose());
  Eigen::MatrixXd dz1 = dh1.cwiseProduct(nn::relu_mask(f.z1));
  b.dw1 = f.sx.transpose() * dz1;
  return b;
}

} // namespace detail

/// Trains the GCN transductively: full-graph forward pass, cross-entropy
/// masked to the training nodes, Adam updates, fixed epoch count. Returns
/// hard predictions and class probabilities for every node.
///
/// `initial` overrides the seeded Glorot initialization and
/// `fixed_split` bypasses the stratified split; both exist so invariance
/// properties can be tested with controlled randomness.
inline TrainResult train_gcn(const CreditGraph& g, const TrainConfig& cfg,
                             std::optional<GcnModel> initial = std::nullopt,
                             std::optional<SplitResult> fixed_split = std::nullopt) {
  if (g.node_count() == 0) throw Error("train_gcn: empty graph");
  const Eigen::MatrixXd x = detail::gcn_input(g, cfg.sensitive_as_input);
  const SparseMatrix s = normalize_adjacency(g).mat;

  TrainResult out;
  out.split = fixed_split ? *fixed_split : split_nodes(g, cfg.train_fraction, cfg.seed);

  auto index = g.id_index();
  std::vector<char> in_train(g.node_count(), 0);
  for (NodeId id : out.split.train_ids) in_train[index.at(id)] = 1;
  const std::size_t train_count = out.split.train_ids.size();
  if (train_count == 0) throw Error("train_gcn: empty training set");
  {
    std::size_t good = 0;
    for (std::size_t i = 0; i < g.node_count(); ++i)
      if (in_train[i] && g.labels[i] == kGood) ++good;
    if (good == 0 || good == train_count)
      throw Error("train_gcn: training set contains a single class");
  }

  Rng rng(cfg.seed);
  out.model = initial ? *initial : GcnModel::init(x.cols(), cfg.hidden1, cfg.hidden2, rng);
  if (out.model.w1.rows() != x.cols())
    throw Error("train_gcn: initial model input dimension mismatch");

  nn::Adam adam({&out.model.w1, &out.model.w2, &out.model.w3}, cfg.learning_rate);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto f = detail::gcn_forward(s, x, out.model);
    auto b = detail::gcn_backward(s, f, out.model, g.labels, in_train, train_count);
    if (!std::isfinite(b.loss))
      throw Error("train_gcn: non-finite loss at epoch " + std::to_string(epoch));
    out.loss_curve.push_back(b.loss);
    adam.step({b.dw1, b.dw2, b.dw3});
  }

  const auto f = detail::gcn_forward(s, x, out.model);
  out.probabilities = f.probs;
  out.predicted.resize(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.predicted[i] = f.probs(r, kGood) > f.probs(r, kBad) ? kGood : kBad;
  }
  return out;
}

} // namespace fairprep
