#pragma once

#include <string>

#include <json.hpp>

#include "fairprep/augment.hpp"
#include "fairprep/feature_edit.hpp"
#include "fairprep/graph.hpp"
#include "fairprep/sampling.hpp"

namespace fairprep {

/// The seven dataset variants of the experiment grid.
enum class Method {
  Original,
  Random,
  Stratified,
  Weighted,
  FeatRandom,
  FeatEqual,
  Augment,
};

inline const std::array<Method, 7>& all_methods() {
  static const std::array<Method, 7> m = {Method::Original,  Method::Random,  Method::Stratified,
                                          Method::Weighted,  Method::FeatRandom,
                                          Method::FeatEqual, Method::Augment};
  return m;
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Original: return "original";
    case Method::Random: return "random";
    case Method::Stratified: return "stratified";
    case Method::Weighted: return "weighted";
    case Method::FeatRandom: return "feat-random";
    case Method::FeatEqual: return "feat-equal";
    case Method::Augment: return "augment";
  }
  throw Error("method_name: invalid method");
}

inline Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  throw Error("unknown method: " + name);
}

/// A prepared dataset variant plus the provenance of the mitigation that
/// produced it (method, seed, balance counts, method-specific extras).
struct PreparedDataset {
  CreditGraph graph;
  nlohmann::json provenance;
};

inline nlohmann::json counts_json(const BalanceCounts& c,
                                  const std::array<std::string, 2>& group_names) {
  nlohmann::json j;
  j["total"] = c.total;
  j["good"] = c.good;
  j["bad"] = c.bad;
  j["overrepresented"] = group_names[c.over_tag];
  for (int tag = 0; tag < 2; ++tag) {
    j["groups"][group_names[tag]] = {
        {"size", c.group_size(static_cast<std::uint8_t>(tag))},
        {"bad", c.cell[tag][kBad]},
        {"good", c.cell[tag][kGood]},
    };
  }
  return j;
}

/// Applies one mitigation method to the base graph. `seed` drives every
/// random choice the method makes; the augmenter's shape parameters come
/// from `augment_cfg`.
inline PreparedDataset prepare_dataset(const CreditGraph& base, Method method, std::uint64_t seed,
                                       const AugmentConfig& augment_cfg = {}) {
  PreparedDataset out;
  nlohmann::json& prov = out.provenance;
  prov["method"] = method_name(method);
  prov["seed"] = seed;

  const BalanceCounts before = group_counts(base);
  switch (method) {
    case Method::Original:
      out.graph = base;
      break;
    case Method::Random:
      out.graph = induced_subgraph(base, random_downsample(base, {SamplingMethod::Random, seed}));
      break;
    case Method::Stratified:
      out.graph =
          induced_subgraph(base, stratified_downsample(base, {SamplingMethod::Stratified, seed}));
      break;
    case Method::Weighted:
      out.graph =
          induced_subgraph(base, weighted_downsample(base, {SamplingMethod::Weighted, seed}));
      break;
    case Method::FeatRandom: {
      out.graph = reassign_sensitive_random(base, seed);
      prov["nc"] = compute_nc(before);
      std::vector<NodeId> flipped;
      for (std::size_t i = 0; i < base.node_count(); ++i)
        if (base.sensitive[i] != out.graph.sensitive[i]) flipped.push_back(base.node_ids[i]);
      prov["flipped_ids"] = flipped;
      break;
    }
    case Method::FeatEqual: {
      out.graph = reassign_sensitive_and_label(base, seed);
      if (before.total % 4 == 0) prov["nc2"] = compute_nc2(before);
      nlohmann::json tag_flips = nlohmann::json::array();
      nlohmann::json label_flips = nlohmann::json::array();
      for (std::size_t i = 0; i < base.node_count(); ++i) {
        if (base.sensitive[i] != out.graph.sensitive[i]) tag_flips.push_back(base.node_ids[i]);
        if (base.labels[i] != out.graph.labels[i]) label_flips.push_back(base.node_ids[i]);
      }
      prov["tag_flips"] = tag_flips;
      prov["label_flips"] = label_flips;
      break;
    }
    case Method::Augment: {
      auto result = augment_dataset(base, augment_cfg, seed);
      out.graph = std::move(result.graph);
      prov["na"] = result.na;
      prov["draws"] = result.draws;
      prov["rejected"] = result.rejected;
      prov["gmm_log_likelihood"] = result.gmm_log_likelihood;
      if (!result.autoencoder_loss.empty()) {
        prov["autoencoder_loss_first"] = result.autoencoder_loss.front();
        prov["autoencoder_loss_final"] = result.autoencoder_loss.back();
      }
      break;
    }
  }
  prov["counts"] = counts_json(group_counts(out.graph), out.graph.group_names);
  return out;
}

} // namespace fairprep
