// Local Lipschitz constant of a random relu net as the l_inf ball grows.

#include <cstdio>
#include <random>

#include "jacobound/jacobound.hpp"

using namespace jacobound;

int main() {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::vector<Index> dims{8, 32, 32, 32, 4};
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Matrix w(dims[i + 1], dims[i]);
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = gauss(rng) / std::sqrt(static_cast<double>(dims[i]));
    std::optional<Activation> act;
    if (i + 2 < dims.size()) act = Activation::relu();
    layers.push_back(Layer{w, Vector::Zero(dims[i + 1]), act});
  }
  const Network net(std::move(layers));
  Vector s(8);
  for (Index i = 0; i < s.size(); ++i) s(i) = gauss(rng);

  std::printf("%10s %12s %12s %12s %12s\n", "radius", "sampled", "recurjac-b", "fastlip", "naive");
  for (double r = 1e-3; r < 20.0; r *= 2.0) {
    const Ball ball{s, r, Norm::linf};
    std::printf("%10.4g %12.6g %12.6g %12.6g %12.6g\n", r, sample_lipschitz_lower(net, ball, 500, 7),
                local_lipschitz(net, ball, Method::recurjac_b).value, local_lipschitz(net, ball, Method::fastlip).value,
                local_lipschitz(net, ball, Method::naive).value);
  }
  std::printf("global recurjac-b: %.6g\n", global_lipschitz(net, Norm::linf, Method::recurjac_b));
}
