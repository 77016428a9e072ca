#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jacobound/maxpool.hpp"
#include "jacobound/network.hpp"

namespace jacobound {

using Json = nlohmann::json;

/// Labelled example from an inputs file.
struct LabeledInput {
  Vector x;
  int label = 0;
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw ModelError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!ok.count(item.key())) throw ModelError(where + ": unknown key '" + item.key() + "'");
}

inline double json_real(const Json& v, const std::string& where) {
  if (!v.is_number()) throw ModelError(where + ": expected a number");
  return v.get<double>();
}

inline Vector json_vector(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ModelError(where + ": expected an array");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = json_real(v[i], where);
  return out;
}

inline Matrix json_matrix(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ModelError(where + ": expected a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) throw ModelError(where + ": rows must be non-empty arrays");
  Matrix out(static_cast<Index>(v.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (!v[r].is_array() || v[r].size() != cols) throw ModelError(where + ": ragged weight matrix");
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) = json_real(v[r][c], where);
  }
  return out;
}

inline std::optional<Activation> json_activation(const Json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  reject_unknown_keys(v, {"kind", "alpha"}, where + ".activation");
  if (!v.contains("kind") || !v["kind"].is_string())
    throw ModelError(where + ".activation: missing string 'kind'");
  const auto text = v["kind"].get<std::string>();
  const auto kind = parse_activation_kind(text);
  if (!kind) throw ModelError(where + ": unknown activation kind '" + text + "'");
  double alpha = 0.0;
  if (*kind == ActivationKind::leaky_relu) {
    if (!v.contains("alpha")) throw ModelError(where + ": leaky_relu needs 'alpha'");
    alpha = json_real(v["alpha"], where + ".alpha");
  } else if (*kind == ActivationKind::elu) {
    alpha = v.contains("alpha") ? json_real(v["alpha"], where + ".alpha") : 1.0;
  }
  return Activation(*kind, alpha);
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ModelError("'" + path + "': " + e.what());
  }
}

}  // namespace detail

/// Parse a model document; the result may still contain max-pooling stages.
inline PooledNetwork parse_model(const Json& doc) {
  detail::reject_unknown_keys(doc, {"layers", "maxpools"}, "model");
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty())
    throw ModelError("model: 'layers' must be a non-empty array");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < doc["layers"].size(); ++i) {
    const Json& node = doc["layers"][i];
    const std::string where = "layer " + std::to_string(i + 1);
    detail::reject_unknown_keys(node, {"weights", "bias", "activation"}, where);
    if (!node.contains("weights") || !node.contains("bias"))
      throw ModelError(where + ": needs 'weights' and 'bias'");
    Layer layer;
    layer.weights = detail::json_matrix(node["weights"], where + ".weights");
    layer.bias = detail::json_vector(node["bias"], where + ".bias");
    layer.activation = detail::json_activation(node.value("activation", Json()), where);
    layers.push_back(std::move(layer));
  }
  std::vector<PoolStage> pools;
  if (doc.contains("maxpools")) {
    if (!doc["maxpools"].is_array()) throw ModelError("model: 'maxpools' must be an array");
    for (const Json& node : doc["maxpools"]) {
      detail::reject_unknown_keys(node, {"after_layer", "groups"}, "maxpool");
      if (!node.contains("after_layer") || !node["after_layer"].is_number_integer() ||
          !node.contains("groups") || !node["groups"].is_array())
        throw ModelError("maxpool: needs integer 'after_layer' and array 'groups'");
      PoolStage stage;
      stage.after_layer = node["after_layer"].get<int>();
      for (const Json& group : node["groups"]) {
        if (!group.is_array()) throw ModelError("maxpool: each group must be an array");
        std::vector<Index> ids;
        for (const Json& id : group) {
          if (!id.is_number_integer()) throw ModelError("maxpool: indices must be integers");
          ids.push_back(id.get<Index>());
        }
        stage.spec.groups.push_back(std::move(ids));
      }
      pools.push_back(std::move(stage));
    }
  }
  return PooledNetwork(std::move(layers), std::move(pools));
}

inline PooledNetwork load_model(const std::string& path) {
  return parse_model(detail::read_json_file(path));
}

/// Load a model file as a plain Network, expanding any max-pooling stages.
inline Network load_network(const std::string& path) { return expand_maxpool(load_model(path)); }

inline Json model_to_json(const std::vector<Layer>& layers, const std::vector<PoolStage>& pools = {}) {
  Json doc;
  doc["layers"] = Json::array();
  for (const auto& layer : layers) {
    Json node;
    node["weights"] = detail::to_json(layer.weights);
    node["bias"] = detail::to_json(layer.bias);
    if (layer.activation) {
      node["activation"] = {{"kind", std::string(name(layer.activation->kind()))}};
      if (layer.activation->kind() == ActivationKind::leaky_relu ||
          layer.activation->kind() == ActivationKind::elu)
        node["activation"]["alpha"] = layer.activation->alpha();
    } else {
      node["activation"] = nullptr;
    }
    doc["layers"].push_back(std::move(node));
  }
  if (!pools.empty()) {
    doc["maxpools"] = Json::array();
    for (const auto& stage : pools) {
      Json groups = Json::array();
      for (const auto& g : stage.spec.groups) groups.push_back(g);
      doc["maxpools"].push_back({{"after_layer", stage.after_layer}, {"groups", groups}});
    }
  }
  return doc;
}

inline void save_model(const std::string& path, const PooledNetwork& net) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write '" + path + "'");
  out << model_to_json(net.layers(), net.pools()).dump(1) << '\n';
}

inline void save_model(const std::string& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write '" + path + "'");
  out << model_to_json(net.layers()).dump(1) << '\n';
}

/// Inputs file: a JSON array of {"x": [...], "label": int}.
inline std::vector<LabeledInput> load_inputs(const std::string& path) {
  const Json doc = detail::read_json_file(path);
  if (!doc.is_array()) throw ModelError("'" + path + "': expected an array of inputs");
  std::vector<LabeledInput> inputs;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "input " + std::to_string(i);
    detail::reject_unknown_keys(doc[i], {"x", "label"}, where);
    if (!doc[i].contains("x")) throw ModelError(where + ": missing 'x'");
    LabeledInput item;
    item.x = detail::json_vector(doc[i]["x"], where + ".x");
    if (!all_finite(item.x)) throw ModelError(where + ": non-finite entry");
    if (doc[i].contains("label")) {
      if (!doc[i]["label"].is_number_integer()) throw ModelError(where + ": label must be an integer");
      item.label = doc[i]["label"].get<int>();
    } else {
      item.label = -1;
    }
    inputs.push_back(std::move(item));
  }
  return inputs;
}

/// A bare JSON array of reals, used for --center.
inline Vector load_vector(const std::string& path) {
  const Json doc = detail::read_json_file(path);
  Vector v = detail::json_vector(doc, "'" + path + "'");
  if (!all_finite(v)) throw ModelError("'" + path + "': non-finite entry");
  return v;
}

}  // namespace jacobound
