#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "jacobound/network.hpp"

namespace jacobound {

/// Disjoint groups of neuron indices, each reduced to its maximum.
struct MaxPoolSpec {
  std::vector<std::vector<Index>> groups;
};

/// Max-pooling applied to h^(after_layer); after_layer = 0 pools the input itself.
struct PoolStage {
  int after_layer = 0;
  MaxPoolSpec spec;
};

namespace detail {

/// Output units of a pooling stage over `width` neurons: every group becomes one
/// unit, every ungrouped neuron passes through; units are ordered by their
/// smallest neuron index.
inline std::vector<std::vector<Index>> pool_units(const MaxPoolSpec& spec, Index width) {
  std::vector<int> owner(static_cast<std::size_t>(width), -1);
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    if (group.size() < 2) throw ModelError("max-pool group needs at least two indices");
    for (Index i : group) {
      if (i < 0 || i >= width)
        throw ModelError("max-pool index " + std::to_string(i) + " out of range for width " +
                         std::to_string(width));
      if (owner[static_cast<std::size_t>(i)] != -1)
        throw ModelError("max-pool groups overlap at index " + std::to_string(i));
      owner[static_cast<std::size_t>(i)] = static_cast<int>(g);
    }
  }
  std::vector<std::vector<Index>> units;
  std::vector<bool> emitted(spec.groups.size(), false);
  for (Index i = 0; i < width; ++i) {
    const int g = owner[static_cast<std::size_t>(i)];
    if (g < 0) {
      units.push_back({i});
    } else if (!emitted[static_cast<std::size_t>(g)]) {
      emitted[static_cast<std::size_t>(g)] = true;
      units.push_back(spec.groups[static_cast<std::size_t>(g)]);
    }
  }
  return units;
}

inline Index pooled_width(const MaxPoolSpec& spec, Index units) {
  Index width = units;
  for (const auto& group : spec.groups) width += static_cast<Index>(group.size()) - 1;
  return width;
}

}  // namespace detail

/// Layers interleaved with max-pooling stages, as read from a model file.
///
/// Layer l+1 consumes the pooled units of h^(l) when a stage follows layer l, so
/// its column count is the number of units rather than n_l.
class PooledNetwork {
 public:
  PooledNetwork(std::vector<Layer> layers, std::vector<PoolStage> pools)
      : layers_(std::move(layers)), pools_(std::move(pools)) {
    std::sort(pools_.begin(), pools_.end(),
              [](const PoolStage& a, const PoolStage& b) { return a.after_layer < b.after_layer; });
    validate();
  }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const std::vector<PoolStage>& pools() const noexcept { return pools_; }
  int depth() const noexcept { return static_cast<int>(layers_.size()); }

  /// Width of h^(l) before pooling.
  Index width_before_pool(int l) const {
    if (l > 0) return layers_[static_cast<std::size_t>(l - 1)].outputs();
    const PoolStage* stage = stage_after(0);
    const Index first_cols = layers_.front().inputs();
    return stage ? detail::pooled_width(stage->spec, first_cols) : first_cols;
  }

  Index input_dim() const { return width_before_pool(0); }

  const PoolStage* stage_after(int l) const {
    for (const auto& stage : pools_)
      if (stage.after_layer == l) return &stage;
    return nullptr;
  }

 private:
  void validate() const {
    if (layers_.empty()) throw ModelError("network needs at least one layer");
    std::set<int> seen;
    for (const auto& stage : pools_) {
      if (stage.after_layer < 0 || stage.after_layer >= depth())
        throw ModelError("max-pool after_layer " + std::to_string(stage.after_layer) +
                         " must lie in [0, " + std::to_string(depth() - 1) + "]");
      if (!seen.insert(stage.after_layer).second)
        throw ModelError("two max-pool stages after layer " + std::to_string(stage.after_layer));
    }
    for (int l = 0; l < depth(); ++l) {
      const Layer& next = layers_[static_cast<std::size_t>(l)];
      const Index width = width_before_pool(l);
      Index expected = width;
      if (const PoolStage* stage = stage_after(l))
        expected = static_cast<Index>(detail::pool_units(stage->spec, width).size());
      if (next.inputs() != expected)
        throw ModelError("layer " + std::to_string(l + 1) + ": dimension mismatch, expects " +
                         std::to_string(next.inputs()) + " inputs but receives " +
                         std::to_string(expected));
    }
    for (int l = 1; l <= depth(); ++l) {
      const Layer& layer = layers_[static_cast<std::size_t>(l - 1)];
      const std::string where = "layer " + std::to_string(l);
      if (layer.bias.size() != layer.outputs()) throw ModelError(where + ": bias length mismatch");
      if (!all_finite(layer.weights) || !all_finite(layer.bias))
        throw ModelError(where + ": non-finite entry");
      if (l == depth() && layer.activation)
        throw ModelError(where + ": final layer must not have an activation");
      if (l < depth() && !layer.activation) throw ModelError(where + ": hidden layer needs an activation");
    }
  }

  std::vector<Layer> layers_;
  std::vector<PoolStage> pools_;
};

/// Direct evaluation with explicit max operations.
inline Vector forward_pooled(const PooledNetwork& net, const Vector& x) {
  if (x.size() != net.input_dim()) throw DimensionError("input dimension mismatch");
  Vector h = x;
  for (int l = 0; l < net.depth(); ++l) {
    if (const PoolStage* stage = net.stage_after(l)) {
      const auto units = detail::pool_units(stage->spec, h.size());
      Vector pooled(static_cast<Index>(units.size()));
      for (std::size_t u = 0; u < units.size(); ++u) {
        double best = h(units[u].front());
        for (Index i : units[u]) best = std::max(best, h(i));
        pooled(static_cast<Index>(u)) = best;
      }
      h = std::move(pooled);
    }
    const Layer& layer = net.layers()[static_cast<std::size_t>(l)];
    Vector z = layer.weights * h + layer.bias;
    h = layer.activation ? apply(*layer.activation, z) : z;
  }
  return h;
}

namespace detail {

/// One relu stage of the pairwise max tree.
struct MaxStage {
  Matrix expand;   // new hidden neurons x current values
  Matrix combine;  // next values x new hidden neurons
  std::vector<std::vector<Index>> units;  // positions of each unit's remaining values
};

/// max(a, b) = relu(a - b) + relu(b) - relu(-b); a lone value v = relu(v) - relu(-v).
inline MaxStage max_stage(const std::vector<std::vector<Index>>& units, Index width) {
  struct Row { Index a; Index b; double sa; double sb; };
  std::vector<Row> rows;
  std::vector<std::vector<std::pair<Index, double>>> combos;  // per next value: (row, coeff)
  MaxStage stage;
  for (const auto& unit : units) {
    std::vector<Index> next_positions;
    for (std::size_t i = 0; i < unit.size(); i += 2) {
      const Index base = static_cast<Index>(rows.size());
      if (i + 1 < unit.size()) {
        rows.push_back({unit[i], unit[i + 1], 1.0, -1.0});
        rows.push_back({unit[i + 1], -1, 1.0, 0.0});
        rows.push_back({unit[i + 1], -1, -1.0, 0.0});
        combos.push_back({{base, 1.0}, {base + 1, 1.0}, {base + 2, -1.0}});
      } else {
        rows.push_back({unit[i], -1, 1.0, 0.0});
        rows.push_back({unit[i], -1, -1.0, 0.0});
        combos.push_back({{base, 1.0}, {base + 1, -1.0}});
      }
      next_positions.push_back(static_cast<Index>(combos.size()) - 1);
    }
    stage.units.push_back(std::move(next_positions));
  }
  stage.expand = Matrix::Zero(static_cast<Index>(rows.size()), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    stage.expand(static_cast<Index>(r), rows[r].a) += rows[r].sa;
    if (rows[r].b >= 0) stage.expand(static_cast<Index>(r), rows[r].b) += rows[r].sb;
  }
  stage.combine = Matrix::Zero(static_cast<Index>(combos.size()), static_cast<Index>(rows.size()));
  for (std::size_t v = 0; v < combos.size(); ++v)
    for (auto [row, coeff] : combos[v]) stage.combine(static_cast<Index>(v), row) = coeff;
  return stage;
}

}  // namespace detail

/// Rewrite every max-pooling stage as ceil(log2(largest group)) auxiliary relu
/// layers; the result is a plain Network computing the same function.
inline Network expand_maxpool(const PooledNetwork& net) {
  std::vector<Layer> out;
  Matrix pending;  // linear map to fold into the next emitted layer's weights
  bool has_pending = false;

  auto emit = [&](Layer layer) {
    if (has_pending) {
      layer.weights = layer.weights * pending;
      has_pending = false;
    }
    out.push_back(std::move(layer));
  };

  for (int l = 0; l < net.depth(); ++l) {
    if (const PoolStage* stage = net.stage_after(l)) {
      auto units = detail::pool_units(stage->spec, net.width_before_pool(l));
      Index width = net.width_before_pool(l);
      // Unit positions inside the current value vector.
      auto needs_reduction = [](const auto& us) {
        return std::any_of(us.begin(), us.end(), [](const auto& u) { return u.size() > 1; });
      };
      while (needs_reduction(units)) {
        auto step = detail::max_stage(units, width);
        emit(Layer{step.expand, Vector::Zero(step.expand.rows()), Activation::relu()});
        pending = step.combine;
        has_pending = true;
        width = step.combine.rows();
        units = std::move(step.units);
      }
    }
    emit(net.layers()[static_cast<std::size_t>(l)]);
  }
  return Network(std::move(out));
}

inline Network expand_maxpool(std::vector<Layer> layers, std::vector<PoolStage> pools) {
  return expand_maxpool(PooledNetwork(std::move(layers), std::move(pools)));
}

}  // namespace jacobound
