#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "adp/envs.hpp"
#include "adp/errors.hpp"
#include "adp/mlp.hpp"
#include "adp/policy.hpp"
#include "adp/report_io.hpp"

namespace adp {

struct CheckpointMeta {
  int obs_dim = 0;
  int act_dim = 0;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string env;
  double validation_return = 0.0;
};

struct Checkpoint {
  CheckpointMeta meta;
  GaussianPolicy policy;
  MlpParams value;
};

namespace detail {

// Weights are written as nested rows; layer shapes come from the row and
// column counts, so loading rebuilds the network without extra metadata.
inline void put_net(nlohmann::json& tensors, const std::string& prefix, const MlpParams& net) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& w = net.layers[i].weight;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    const std::string base = prefix + ".layers." + std::to_string(i) + ".";
    tensors[base + "weight"] = std::move(rows);
    nlohmann::json bias = nlohmann::json::array();
    for (Eigen::Index r = 0; r < net.layers[i].bias.size(); ++r) bias.push_back(net.layers[i].bias(r));
    tensors[base + "bias"] = std::move(bias);
  }
}

inline double real_at(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw CompatibilityError("checkpoint tensor " + where + " holds a non-number");
  return v.get<double>();
}

inline MlpParams get_net(const nlohmann::json& tensors, const std::string& prefix) {
  MlpParams net;
  for (std::size_t i = 0;; ++i) {
    const std::string base = prefix + ".layers." + std::to_string(i) + ".";
    if (!tensors.contains(base + "weight")) break;
    const auto& rows = tensors.at(base + "weight");
    if (!tensors.contains(base + "bias")) throw CompatibilityError("checkpoint is missing " + base + "bias");
    const auto& bias = tensors.at(base + "bias");
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || !bias.is_array() || bias.size() != rows.size())
      throw CompatibilityError("checkpoint tensor " + base + "weight has a bad shape");
    DenseLayer layer;
    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    const auto n_cols = static_cast<Eigen::Index>(rows[0].size());
    layer.weight.resize(n_rows, n_cols);
    layer.bias.resize(n_rows);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols)
        throw CompatibilityError("checkpoint tensor " + base + "weight is ragged");
      for (Eigen::Index c = 0; c < n_cols; ++c) layer.weight(r, c) = real_at(row[static_cast<std::size_t>(c)], base + "weight");
      layer.bias(r) = real_at(bias[static_cast<std::size_t>(r)], base + "bias");
    }
    if (!net.layers.empty() && net.layers.back().weight.rows() != n_cols)
      throw CompatibilityError("checkpoint layers " + prefix + " do not chain");
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw CompatibilityError("checkpoint has no " + prefix + " tensors");
  return net;
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const Checkpoint& ck) {
  nlohmann::json doc;
  doc["meta"] = {{"obs_dim", ck.meta.obs_dim},     {"act_dim", ck.meta.act_dim}, {"iteration", ck.meta.iteration},
                 {"seed", ck.meta.seed},           {"env", ck.meta.env},         {"policy_std", ck.policy.std},
                 {"validation_return", ck.meta.validation_return}};
  nlohmann::json tensors = nlohmann::json::object();
  detail::put_net(tensors, "policy", ck.policy.net);
  detail::put_net(tensors, "value", ck.value);
  doc["tensors"] = std::move(tensors);
  return doc;
}

// Written to a sibling temp file and renamed, so a crash never leaves a
// truncated checkpoint behind.
inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    auto out = open_for_write(tmp);
    out << checkpoint_json(ck).dump() << '\n';
    close_checked(out, tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CompatibilityError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.contains("meta") || !doc.contains("tensors"))
    throw CompatibilityError("checkpoint " + path.string() + " lacks meta or tensors");
  Checkpoint ck;
  try {
    const auto& m = doc.at("meta");
    ck.meta.obs_dim = m.at("obs_dim").get<int>();
    ck.meta.act_dim = m.at("act_dim").get<int>();
    ck.meta.iteration = m.at("iteration").get<int>();
    ck.meta.seed = m.at("seed").get<std::uint64_t>();
    ck.meta.env = m.value("env", std::string{});
    ck.meta.validation_return = m.value("validation_return", 0.0);
    ck.policy.std = m.value("policy_std", kPolicyStd);
  } catch (const nlohmann::json::exception& e) {
    throw CompatibilityError("checkpoint " + path.string() + " has malformed meta: " + e.what());
  }
  ck.policy.net = detail::get_net(doc.at("tensors"), "policy");
  ck.value = detail::get_net(doc.at("tensors"), "value");
  if (ck.policy.obs_dim() != ck.meta.obs_dim || ck.policy.act_dim() != ck.meta.act_dim ||
      ck.value.input_dim() != ck.meta.obs_dim || ck.value.output_dim() != 1)
    throw CompatibilityError("checkpoint " + path.string() + " tensors disagree with its meta dimensions");
  return ck;
}

// Rejects a checkpoint that cannot drive `kind`.
inline void check_compatible(const Checkpoint& ck, EnvKind kind) {
  const auto& info = env_info(kind);
  if (ck.meta.obs_dim != info.obs_dim || ck.meta.act_dim != info.act_dim)
    throw CompatibilityError("checkpoint dimensions (" + std::to_string(ck.meta.obs_dim) + ", " +
                             std::to_string(ck.meta.act_dim) + ") do not match environment '" + to_string(kind) +
                             "' (" + std::to_string(info.obs_dim) + ", " + std::to_string(info.act_dim) + ")");
  if (!ck.meta.env.empty() && ck.meta.env != to_string(kind))
    throw CompatibilityError("checkpoint was trained on '" + ck.meta.env + "', config names '" + to_string(kind) + "'");
}

}  // namespace adp
