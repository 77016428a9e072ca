// Certified radius and stationary-point exclusion radius for a model file.
//   certify_point MODEL INPUTS [p]

#include <cstdio>
#include <iostream>

#include "jacobound/jacobound.hpp"

using namespace jacobound;

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: certify_point MODEL INPUTS [p]\n";
    return 2;
  }
  try {
    const Network net = load_network(argv[1]);
    const auto inputs = load_inputs(argv[2]);
    const Norm p = parse_norm(argc > 3 ? argv[3] : "inf");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Vector scores = evaluate(net, inputs[i].x);
      const Index c = argmax(scores);
      if (inputs[i].label >= 0 && inputs[i].label != c) {
        std::printf("%zu: misclassified\n", i);
        continue;
      }
      const auto targets = select_targets(scores, c, TargetMode::runner_up);
      const Certificate cert = certify_radius(net, inputs[i].x, c, targets, p, 10.0);
      const ExclusionResult ex = exclusion_radius(net, inputs[i].x, c, p, 10.0);
      std::printf("%zu: class %td, certified %.6g against %td, no stationary point of f_%td within %.6g\n", i, c,
                  cert.radius, targets.front(), c, ex.radius);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
