#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jacobound/activation.hpp"
#include "jacobound/error.hpp"
#include "jacobound/linalg.hpp"

namespace jacobound {

/// Affine map followed by an optional element-wise activation.
struct Layer {
  Matrix weights;  // n_l x n_{l-1}
  Vector bias;     // n_l
  std::optional<Activation> activation;

  Index inputs() const noexcept { return weights.cols(); }
  Index outputs() const noexcept { return weights.rows(); }
};

/// Feed-forward network f(x) = W_H h_{H-1} + b_H with h_l = act_l(W_l h_{l-1} + b_l).
///
/// Immutable once constructed; the constructor rejects inconsistent shapes,
/// non-finite entries, a final activation, or a hidden layer without one.
class Network {
 public:
  explicit Network(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

  /// Number of affine layers H.
  int depth() const noexcept { return static_cast<int>(layers_.size()); }
  Index input_dim() const noexcept { return layers_.front().inputs(); }
  Index output_dim() const noexcept { return layers_.back().outputs(); }

  /// Layer l in 1-based numbering (1 <= l <= H).
  const Layer& layer(int l) const { return layers_.at(static_cast<std::size_t>(l - 1)); }
  const Matrix& weights(int l) const { return layer(l).weights; }
  const Activation& activation(int l) const { return *layer(l).activation; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

 private:
  void validate() const {
    if (layers_.empty()) throw ModelError("network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& layer = layers_[i];
      const std::string where = "layer " + std::to_string(i + 1);
      if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
        throw ModelError(where + ": empty weight matrix");
      if (layer.bias.size() != layer.weights.rows())
        throw ModelError(where + ": bias length " + std::to_string(layer.bias.size()) +
                         " does not match " + std::to_string(layer.weights.rows()) + " rows");
      if (!all_finite(layer.weights) || !all_finite(layer.bias))
        throw ModelError(where + ": non-finite entry");
      if (i > 0 && layer.weights.cols() != layers_[i - 1].weights.rows())
        throw ModelError(where + ": dimension mismatch, expects " +
                         std::to_string(layer.weights.cols()) + " inputs but previous layer has " +
                         std::to_string(layers_[i - 1].weights.rows()) + " outputs");
      const bool last = i + 1 == layers_.size();
      if (last && layer.activation) throw ModelError(where + ": final layer must not have an activation");
      if (!last && !layer.activation) throw ModelError(where + ": hidden layer needs an activation");
    }
  }

  std::vector<Layer> layers_;
};

struct ForwardResult {
  Vector output;
  std::vector<Vector> preactivations;  // f^(l)(x) for l = 1..H-1
};

inline void check_input(const Network& net, const Vector& x) {
  if (x.size() != net.input_dim())
    throw DimensionError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(net.input_dim()));
}

inline Vector apply(const Activation& act, const Vector& z) { return z.unaryExpr(act); }

inline ForwardResult forward(const Network& net, const Vector& x) {
  check_input(net, x);
  ForwardResult result;
  Vector h = x;
  for (int l = 1; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    Vector z = layer.weights * h + layer.bias;
    h = apply(*layer.activation, z);
    result.preactivations.push_back(std::move(z));
  }
  const auto& last = net.layer(net.depth());
  result.output = last.weights * h + last.bias;
  return result;
}

inline Vector evaluate(const Network& net, const Vector& x) { return forward(net, x).output; }

/// Derivative vectors sigma'(f^(l)(x)) of every hidden layer.
inline std::vector<Vector> activation_slopes(const Network& net, const ForwardResult& fwd) {
  std::vector<Vector> slopes;
  for (int l = 1; l < net.depth(); ++l) {
    const auto& act = net.activation(l);
    slopes.push_back(fwd.preactivations[static_cast<std::size_t>(l - 1)].unaryExpr(
        [&](double z) { return act.derivative(z); }));
  }
  return slopes;
}

/// Partial Jacobians Y^(-l)(x) = d f / d h^(l-1) for l = 1..H, stored at index l-1.
inline std::vector<Matrix> backward_partials(const Network& net, const Vector& x) {
  const auto slopes = activation_slopes(net, forward(net, x));
  const int depth = net.depth();
  std::vector<Matrix> partials(static_cast<std::size_t>(depth));
  partials[static_cast<std::size_t>(depth - 1)] = net.weights(depth);
  for (int l = depth - 1; l >= 1; --l) {
    const Matrix& deeper = partials[static_cast<std::size_t>(l)];
    partials[static_cast<std::size_t>(l - 1)] =
        (deeper * slopes[static_cast<std::size_t>(l - 1)].asDiagonal()) * net.weights(l);
  }
  return partials;
}

/// Forward partials d f^(l) / d x for l = 1..H, stored at index l-1.
inline std::vector<Matrix> forward_partials(const Network& net, const Vector& x) {
  const auto slopes = activation_slopes(net, forward(net, x));
  std::vector<Matrix> partials;
  partials.push_back(net.weights(1));
  for (int l = 2; l <= net.depth(); ++l) {
    partials.push_back(net.weights(l) *
                       (slopes[static_cast<std::size_t>(l - 2)].asDiagonal() * partials.back()));
  }
  return partials;
}

/// Jacobian W_H S_{H-1} ... S_1 W_1 at x, with S_l = diag(sigma'(f^(l)(x))).
inline Matrix jacobian_at(const Network& net, const Vector& x) {
  return backward_partials(net, x).front();
}

/// Replace the final affine layer, keeping all hidden layers.
inline Network with_output_layer(const Network& net, Matrix weights, Vector bias) {
  auto layers = net.layers();
  layers.back().weights = std::move(weights);
  layers.back().bias = std::move(bias);
  return Network(std::move(layers));
}

/// Network restricted to output row j.
inline Network select_output(const Network& net, Index j) {
  if (j < 0 || j >= net.output_dim()) throw DimensionError("output index out of range");
  const auto& last = net.layer(net.depth());
  return with_output_layer(net, last.weights.row(j), last.bias.segment(j, 1));
}

}  // namespace jacobound
