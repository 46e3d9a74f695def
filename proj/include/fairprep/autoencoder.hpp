#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fairprep/graph.hpp"
#include "fairprep/nn.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

/// Row-stochastic neighbor-mean operator. Row i averages i's neighbors;
/// an isolated node aggregates only itself.
inline SparseMatrix mean_aggregator(const CreditGraph& g) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.node_count());
  auto index = g.id_index();
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const Edge& e : g.edges) {
    degree(static_cast<Eigen::Index>(index.at(e.a))) += 1.0;
    degree(static_cast<Eigen::Index>(index.at(e.b))) += 1.0;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * g.edges.size() + static_cast<std::size_t>(n));
  for (const Edge& e : g.edges) {
    const auto i = static_cast<Eigen::Index>(index.at(e.a));
    const auto j = static_cast<Eigen::Index>(index.at(e.b));
    trip.emplace_back(i, j, 1.0 / degree(i));
    trip.emplace_back(j, i, 1.0 / degree(j));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (degree(i) == 0.0) trip.emplace_back(i, i, 1.0);
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// Two neighborhood-aggregating layers mapping features to latent codes.
/// Each layer combines a node's own features with the mean of its
/// neighbors' through separate weight matrices; the first layer is ReLU,
/// the latent layer is linear.
struct SageEncoder {
  Eigen::MatrixXd w_self1, w_nbr1; // feature_dim -> hidden
  Eigen::MatrixXd w_self2, w_nbr2; // hidden -> latent

  Eigen::Index latent_dim() const { return w_self2.cols(); }

  Eigen::MatrixXd encode(const SparseMatrix& agg, const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd h1 = nn::relu(x * w_self1 + agg * x * w_nbr1);
    return h1 * w_self2 + agg * h1 * w_nbr2;
  }
};

/// Two dense layers mapping latent codes back to feature space; the final
/// sigmoid keeps outputs inside the encoded feature range [0,1].
struct FeatureDecoder {
  Eigen::MatrixXd v1, v2; // latent -> hidden -> feature_dim
  Eigen::RowVectorXd b1, b2;

  Eigen::MatrixXd decode(const Eigen::MatrixXd& z) const {
    const Eigen::MatrixXd h = nn::relu((z * v1).rowwise() + b1);
    return nn::sigmoid((h * v2).rowwise() + b2);
  }
};

struct AutoencoderConfig {
  int epochs = 200;
  double learning_rate = 0.01;
  int hidden = 32;
  int latent = 16;
  std::uint64_t seed = 0;
};

struct AutoencoderResult {
  SageEncoder encoder;
  FeatureDecoder decoder;
  std::vector<double> loss_curve; // mean squared reconstruction error per epoch
};

namespace detail {

struct AeForward {
  Eigen::MatrixXd ax, z1, h1, ah1, z, z3, h3, z4, xhat;
};

inline AeForward ae_forward(const SparseMatrix& agg, const Eigen::MatrixXd& x,
                            const SageEncoder& enc, const FeatureDecoder& dec) {
  AeForward f;
  f.ax = agg * x;
  f.z1 = x * enc.w_self1 + f.ax * enc.w_nbr1;
  f.h1 = nn::relu(f.z1);
  f.ah1 = agg * f.h1;
  f.z = f.h1 * enc.w_self2 + f.ah1 * enc.w_nbr2;
  f.z3 = (f.z * dec.v1).rowwise() + dec.b1;
  f.h3 = nn::relu(f.z3);
  f.z4 = (f.h3 * dec.v2).rowwise() + dec.b2;
  f.xhat = nn::sigmoid(f.z4);
  return f;
}

struct AeGrads {
  double loss;
  Eigen::MatrixXd d_self1, d_nbr1, d_self2, d_nbr2, dv1, dv2;
  Eigen::RowVectorXd db1, db2;
};

inline AeGrads ae_backward(const SparseMatrix& agg, const Eigen::MatrixXd& x, const AeForward& f,
                           const SageEncoder& enc, const FeatureDecoder& dec) {
  AeGrads g;
  const double count = static_cast<double>(x.rows()) * static_cast<double>(x.cols());
  const Eigen::MatrixXd diff = f.xhat - x;
  g.loss = diff.squaredNorm() / count;

  const Eigen::MatrixXd dz4 =
      (2.0 / count) * diff.cwiseProduct(f.xhat.cwiseProduct((1.0 - f.xhat.array()).matrix()));
  g.dv2 = f.h3.transpose() * dz4;
  g.db2 = dz4.colwise().sum();
  const Eigen::MatrixXd dh3 = dz4 * dec.v2.transpose();
  const Eigen::MatrixXd dz3 = dh3.cwiseProduct(nn::relu_mask(f.z3));
  g.dv1 = f.z.transpose() * dz3;
  g.db1 = dz3.colwise().sum();
  const Eigen::MatrixXd dz = dz3 * dec.v1.transpose();

  g.d_self2 = f.h1.transpose() * dz;
  g.d_nbr2 = f.ah1.transpose() * dz;
  const Eigen::MatrixXd dh1 =
      dz * enc.w_self2.transpose() + agg.transpose() * (dz * enc.w_nbr2.transpose());
  const Eigen::MatrixXd dz1 = dh1.cwiseProduct(nn::relu_mask(f.z1));
  g.d_self1 = x.transpose() * dz1;
  g.d_nbr1 = f.ax.transpose() * dz1;
  return g;
}

} // namespace detail

/// Trains encoder and decoder jointly to minimize the mean squared
/// reconstruction error of the node features, full batch with Adam.
/// Divergence (non-finite loss) is reported with the epoch it occurred at.
inline AutoencoderResult train_autoencoder(const CreditGraph& g, const AutoencoderConfig& cfg) {
  if (g.node_count() == 0) throw Error("train_autoencoder: empty graph");
  const Eigen::Index feature_dim = g.features.cols();
  if (cfg.latent < 1) throw Error("train_autoencoder: latent dimension must be positive");
  if (cfg.latent > feature_dim)
    throw Error("train_autoencoder: latent dimension exceeds feature dimension");

  const SparseMatrix agg = mean_aggregator(g);
  Rng rng(cfg.seed);
  AutoencoderResult out;
  out.encoder.w_self1 = nn::glorot(feature_dim, cfg.hidden, rng);
  out.encoder.w_nbr1 = nn::glorot(feature_dim, cfg.hidden, rng);
  out.encoder.w_self2 = nn::glorot(cfg.hidden, cfg.latent, rng);
  out.encoder.w_nbr2 = nn::glorot(cfg.hidden, cfg.latent, rng);
  out.decoder.v1 = nn::glorot(cfg.latent, cfg.hidden, rng);
  out.decoder.v2 = nn::glorot(cfg.hidden, feature_dim, rng);
  out.decoder.b1 = Eigen::RowVectorXd::Zero(cfg.hidden);
  out.decoder.b2 = Eigen::RowVectorXd::Zero(feature_dim);

  nn::Adam adam({&out.encoder.w_self1, &out.encoder.w_nbr1, &out.encoder.w_self2,
                 &out.encoder.w_nbr2, &out.decoder.v1, &out.decoder.v2},
                cfg.learning_rate);
  // Bias rows ride along as 1-row matrices for the optimizer.
  Eigen::MatrixXd b1m = out.decoder.b1, b2m = out.decoder.b2;
  nn::Adam adam_bias({&b1m, &b2m}, cfg.learning_rate);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto f = detail::ae_forward(agg, g.features, out.encoder, out.decoder);
    const auto grads = detail::ae_backward(agg, g.features, f, out.encoder, out.decoder);
    if (!std::isfinite(grads.loss))
      throw Error("train_autoencoder: non-finite loss at epoch " + std::to_string(epoch));
    out.loss_curve.push_back(grads.loss);
    adam.step({grads.d_self1, grads.d_nbr1, grads.d_self2, grads.d_nbr2, grads.dv1, grads.dv2});
    adam_bias.step({grads.db1, grads.db2});
    out.decoder.b1 = b1m;
    out.decoder.b2 = b2m;
  }
  return out;
}

/// Latent codes for every node of the graph the encoder was trained on.
inline Eigen::MatrixXd encode_graph(const CreditGraph& g, const SageEncoder& enc) {
  return enc.encode(mean_aggregator(g), g.features);
}

} // namespace fairprep
