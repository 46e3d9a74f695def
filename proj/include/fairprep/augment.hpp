#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fairprep/autoencoder.hpp"
#include "fairprep/gmm.hpp"
#include "fairprep/graph.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

/// Number of synthetic nodes needed to level the groups: O - U.
inline std::int64_t compute_na(const BalanceCounts& c) {
  if (c.over < c.under) throw Error("compute_na: group roles are inverted");
  return c.over - c.under;
}

/// Admissible ranges for decoded rows, derived from the original dataset
/// only. Continuous columns carry the observed [min,max]; each categorical
/// source column carries the set of levels observed (as column indices of
/// its one-hot block). Decoded categorical blocks are snapped to the
/// argmax level, so a level never observed must not win the argmax.
struct ValidityRules {
  struct ContinuousRange {
    Eigen::Index column;
    double lo, hi;
  };
  struct CategoricalBlock {
    Eigen::Index first_column;
    Eigen::Index width;
    std::vector<bool> level_seen;
  };
  std::vector<ContinuousRange> continuous;
  std::vector<CategoricalBlock> categorical;

  static ValidityRules from_graph(const CreditGraph& g) {
    ValidityRules r;
    Eigen::Index c = 0;
    const Eigen::Index width = g.features.cols();
    while (c < width) {
      if (!g.columns[static_cast<std::size_t>(c)].categorical()) {
        r.continuous.push_back({c, g.features.col(c).minCoeff(), g.features.col(c).maxCoeff()});
        ++c;
        continue;
      }
      const std::string& source = g.columns[static_cast<std::size_t>(c)].source;
      Eigen::Index end = c;
      while (end < width && g.columns[static_cast<std::size_t>(end)].categorical() &&
             g.columns[static_cast<std::size_t>(end)].source == source)
        ++end;
      CategoricalBlock block{c, end - c, std::vector<bool>(static_cast<std::size_t>(end - c), false)};
      for (Eigen::Index col = c; col < end; ++col)
        block.level_seen[static_cast<std::size_t>(col - c)] = (g.features.col(col).array() > 0.5).any();
      r.categorical.push_back(std::move(block));
      c = end;
    }
    return r;
  }

  /// Narrows the range of the continuous column at `column`.
  void restrict_continuous(Eigen::Index column, double lo, double hi) {
    for (auto& cr : continuous) {
      if (cr.column == column) {
        cr.lo = lo;
        cr.hi = hi;
        return;
      }
    }
    throw Error("ValidityRules: no continuous range for column " + std::to_string(column));
  }

  bool admissible(const Eigen::RowVectorXd& row) const {
    for (const auto& cr : continuous) {
      const double v = row(cr.column);
      if (v < cr.lo || v > cr.hi) return false;
    }
    for (const auto& block : categorical) {
      Eigen::Index arg = 0;
      row.segment(block.first_column, block.width).maxCoeff(&arg);
      if (!block.level_seen[static_cast<std::size_t>(arg)]) return false;
    }
    return true;
  }

  /// Replaces each categorical block with the crisp one-hot of its argmax,
  /// making the decoded row a valid profile.
  void snap_categorical(Eigen::RowVectorXd& row) const {
    for (const auto& block : categorical) {
      Eigen::Index arg = 0;
      row.segment(block.first_column, block.width).maxCoeff(&arg);
      row.segment(block.first_column, block.width).setZero();
      row(block.first_column + arg) = 1.0;
    }
  }
};

/// A batch of generated nodes: feature rows, voted labels, and the latent
/// draws they decode from (kept for edge attachment).
struct SyntheticNodes {
  Eigen::MatrixXd features;
  std::vector<std::uint8_t> labels;
  Eigen::MatrixXd latents;
  std::int64_t draws = 0;
  std::int64_t rejected = 0;
};

/// Draws from the latent mixture, decodes, snaps categorical blocks and
/// keeps rows that pass the validity rules until `na` rows are accepted.
/// Labels come from a majority vote of the `vote_k` nearest real latents.
/// Gives up after `retry_factor * na` draws.
inline SyntheticNodes sample_synthetic(const LatentGmm& gmm, const FeatureDecoder& decoder,
                                       std::int64_t na, const ValidityRules& rules,
                                       const Eigen::MatrixXd& real_latents,
                                       const std::vector<std::uint8_t>& real_labels,
                                       std::uint64_t seed, int vote_k = 5,
                                       std::int64_t retry_factor = 100) {
  if (na < 0) throw Error("sample_synthetic: negative count");
  if (static_cast<std::size_t>(real_latents.rows()) != real_labels.size())
    throw Error("sample_synthetic: latent/label size mismatch");
  SyntheticNodes out;
  out.features.resize(na, decoder.v2.cols());
  out.latents.resize(na, gmm.dim());
  out.labels.reserve(static_cast<std::size_t>(na));
  if (na == 0) return out;
  if (real_latents.rows() == 0) throw Error("sample_synthetic: no real latents for the label vote");

  Rng rng(seed);
  const std::int64_t cap = retry_factor * na;
  std::int64_t accepted = 0;
  while (accepted < na) {
    if (out.draws >= cap)
      throw Error("sample_synthetic: retry cap of " + std::to_string(cap) +
                  " draws exhausted with " + std::to_string(accepted) + "/" + std::to_string(na) +
                  " rows accepted; validity rules reject too many draws");
    ++out.draws;
    const Eigen::RowVectorXd z = sample_gmm(gmm, rng);
    Eigen::RowVectorXd row = decoder.decode(z);
    rules.snap_categorical(row);
    if (!rules.admissible(row)) {
      ++out.rejected;
      continue;
    }

    // Label: majority vote among the nearest real latents, ties broken by
    // the closest neighbor's label.
    const Eigen::VectorXd d2 = (real_latents.rowwise() - z).rowwise().squaredNorm();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(vote_k),
                                                static_cast<std::size_t>(real_latents.rows()));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(real_latents.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return d2(a) != d2(b) ? d2(a) < d2(b) : a < b;
                      });
    int good_votes = 0;
    for (std::size_t j = 0; j < k; ++j)
      if (real_labels[static_cast<std::size_t>(order[j])] == kGood) ++good_votes;
    std::uint8_t label;
    if (2 * good_votes > static_cast<int>(k)) {
      label = kGood;
    } else if (2 * good_votes < static_cast<int>(k)) {
      label = kBad;
    } else {
      label = real_labels[static_cast<std::size_t>(order[0])];
    }

    out.features.row(accepted) = row;
    out.latents.row(accepted) = z;
    out.labels.push_back(label);
    ++accepted;
  }
  return out;
}

/// Adds the synthetic nodes to the graph, tagging them with the
/// underrepresented sensitive value and wiring each to its k nearest real
/// nodes in latent space. Original nodes, features, labels and edges are
/// untouched; new ids continue past the current maximum.
inline CreditGraph attach_synthetic(const CreditGraph& g, const SyntheticNodes& synth,
                                    const Eigen::MatrixXd& real_latents, int k) {
  const std::int64_t ns = synth.features.rows();
  if (ns == 0) return g;
  const std::size_t n = g.node_count();
  if (static_cast<std::size_t>(real_latents.rows()) != n)
    throw Error("attach_synthetic: latent row count does not match graph");
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw Error("attach_synthetic: k must be between 1 and the real-node count");
  if (synth.features.cols() != g.features.cols())
    throw Error("attach_synthetic: synthetic feature width mismatch");

  const BalanceCounts counts = group_counts(g);
  const std::uint8_t under = counts.under_tag();

  CreditGraph out = g;
  NodeId next_id = 0;
  for (NodeId id : g.node_ids) next_id = std::max(next_id, id + 1);

  out.features.conservativeResize(g.features.rows() + ns, Eigen::NoChange);
  for (std::int64_t s = 0; s < ns; ++s) {
    out.features.row(g.features.rows() + s) = synth.features.row(s);
    out.sensitive.push_back(under);
    out.labels.push_back(synth.labels[static_cast<std::size_t>(s)]);
    out.node_ids.push_back(next_id + s);
  }

  std::vector<Edge> new_edges = g.edges;
  std::vector<Eigen::Index> order(n);
  for (std::int64_t s = 0; s < ns; ++s) {
    const Eigen::VectorXd d2 = (real_latents.rowwise() - synth.latents.row(s)).rowwise().squaredNorm();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (d2(a) != d2(b)) return d2(a) < d2(b);
                        return g.node_ids[static_cast<std::size_t>(a)] < g.node_ids[static_cast<std::size_t>(b)];
                      });
    for (int j = 0; j < k; ++j) {
      const NodeId real = g.node_ids[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
      const NodeId mine = next_id + s;
      new_edges.push_back(real < mine ? Edge{real, mine} : Edge{mine, real});
    }
  }
  out.edges = normalize_edges(std::move(new_edges));
  out.validate();
  return out;
}

struct AugmentConfig {
  AutoencoderConfig autoencoder;
  int gmm_components = 5;
  int vote_k = 5;
  int attach_k = 10;
  std::int64_t retry_factor = 100;
};

struct AugmentResult {
  CreditGraph graph;
  std::int64_t na = 0;
  std::int64_t draws = 0;
  std::int64_t rejected = 0;
  std::vector<double> autoencoder_loss;
  std::vector<double> gmm_log_likelihood;
};

/// End-to-end augmentation: train the autoencoder on the graph, fit the
/// latent mixture on the underrepresented group's codes, generate NA
/// validated rows and attach them. Seeds for the three stages derive from
/// the one seed given.
inline AugmentResult augment_dataset(const CreditGraph& g, AugmentConfig cfg, std::uint64_t seed) {
  const BalanceCounts counts = group_counts(g);
  const std::int64_t na = compute_na(counts);

  cfg.autoencoder.seed = seed;
  AugmentResult out;
  out.na = na;
  if (na == 0) {
    out.graph = g;
    return out;
  }

  auto trained = train_autoencoder(g, cfg.autoencoder);
  out.autoencoder_loss = trained.loss_curve;
  const Eigen::MatrixXd latents = encode_graph(g, trained.encoder);

  std::vector<Eigen::Index> under_rows;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (g.sensitive[i] == counts.under_tag()) under_rows.push_back(static_cast<Eigen::Index>(i));
  Eigen::MatrixXd under_latents(under_rows.size(), latents.cols());
  for (std::size_t r = 0; r < under_rows.size(); ++r) under_latents.row(r) = latents.row(under_rows[r]);

  const auto fit = fit_gmm(under_latents, cfg.gmm_components, seed + 1);
  out.gmm_log_likelihood = fit.log_likelihood;

  const ValidityRules rules = ValidityRules::from_graph(g);
  const SyntheticNodes synth =
      sample_synthetic(fit.gmm, trained.decoder, na, rules, latents, g.labels, seed + 2,
                       cfg.vote_k, cfg.retry_factor);
  out.draws = synth.draws;
  out.rejected = synth.rejected;
  out.graph = attach_synthetic(g, synth, latents, cfg.attach_k);
  return out;
}

} // namespace fairprep
