#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace jacobound;
using namespace jacobound::testing;

namespace {

Matrix row(std::initializer_list<double> values) {
  Matrix m(1, static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) m(0, i++) = v;
  return m;
}

}  // namespace

TEST(WorstCaseMatrix, HandValues) {
  EXPECT_EQ(worst_case_matrix(BoundPair{row({-1, 2}), row({3, 2})}), row({3, 2}));
  EXPECT_EQ(worst_case_matrix(BoundPair{Matrix::Zero(2, 3), Matrix::Zero(2, 3)}), Matrix::Zero(2, 3));
}

TEST(WorstCaseMatrix, DominatesBothSides) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = random_matrix(rng, 4, 5), b = random_matrix(rng, 4, 5);
    const BoundPair bp{a.cwiseMin(b), a.cwiseMax(b)};
    const Matrix m = worst_case_matrix(bp);
    EXPECT_TRUE((m.array() >= bp.lower.cwiseAbs().array()).all());
    EXPECT_TRUE((m.array() >= bp.upper.cwiseAbs().array()).all());
  }
}

TEST(LipschitzP, HandValues) {
  EXPECT_DOUBLE_EQ(lipschitz_p(row({3, 2}), Norm::linf), 5.0);
  EXPECT_DOUBLE_EQ(lipschitz_p(row({3, 2}), Norm::l1), 3.0);
  EXPECT_NEAR(lipschitz_p(row({3, 4}), Norm::l2), 5.0, 1e-9);
  EXPECT_EQ(lipschitz_p(Matrix::Zero(3, 3), Norm::l2), 0.0);
}

TEST(LipschitzP, PowerIterationMatchesSvd) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const Matrix m = random_matrix(rng, 1 + t % 7, 1 + t % 11).cwiseAbs();
    const double exact = induced_norm(m, Norm::l2);
    const double power = lipschitz_p(m, Norm::l2);
    EXPECT_GE(power, exact * (1 - 1e-12));
    EXPECT_LE(power, exact * (1 + 1e-9));
  }
}

TEST(LipschitzP, NonConvergenceIsReported) {
  // Unreachable tolerance within a two-step budget.
  Matrix m(2, 2);
  m << 1.0, 0.999, 0.0, 1.0;
  try {
    nonnegative_spectral_norm(m, {1e-16, 2});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Refined, AllUnstableDegeneratesToRowSums) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Network net = random_net(rng, {4, 8, 8, 8, 2}, Activation::relu());
    const LayerIntervals li = global_grad_ranges(net);
    const JacobianBounds jb = recurjac_backward(net, li);
    bool all_unstable = true;
    for (Index j = 0; j < jb.jacobian().lower.rows(); ++j)
      for (Index k = 0; k < jb.jacobian().lower.cols(); ++k)
        all_unstable = all_unstable && unstable(jb.jacobian().lower(j, k), jb.jacobian().upper(j, k));
    if (!all_unstable) continue;
    EXPECT_EQ(lipschitz_inf_refined(net, jb, li), lipschitz_p(worst_case_matrix(jb), Norm::linf));
  }
}

TEST(Refined, LinearNetIsExact) {
  const Network net = load_network(fixture("linear_two_layer.json"));
  const LayerIntervals li = IntervalPropagation{}(net, Ball{Vector::Zero(2), 1.0, Norm::linf});
  const double exact = induced_norm(net.weights(2) * net.weights(1), Norm::linf);
  EXPECT_NEAR(lipschitz_inf_refined(net, recurjac_backward(net, li), li), exact, 1e-12);
  EXPECT_NEAR(local_lipschitz(net, Ball{Vector::Zero(2), 1.0, Norm::linf}, Method::recurjac_b).value, exact, 1e-12);
}

TEST(Refined, NeverWorseThanPlainNorm) {
  std::mt19937_64 rng(4);
  int improved = 0;
  for (int t = 0; t < 30; ++t) {
    const Network net = random_net(rng, random_dims(rng, 4, 4, 12, 3), Activation::relu());
    const Vector s = random_vector(rng, net.input_dim());
    const double r1 = first_unstable_radius(net, s, Norm::linf);
    for (double scale : {0.5, 2.0, 6.0}) {
      const LayerIntervals li = IntervalPropagation{}(net, Ball{s, r1 * scale, Norm::linf});
      const JacobianBounds jb = recurjac_backward(net, li);
      const double refined = lipschitz_inf_refined(net, jb, li);
      const double plain = lipschitz_p(worst_case_matrix(jb), Norm::linf);
      EXPECT_LE(refined, plain + 1e-12);
      improved += refined < plain ? 1 : 0;
    }
  }
  EXPECT_GT(improved, 0);
}

TEST(Refined, RequiresBackwardLevels) {
  std::mt19937_64 rng(5);
  const Network net = random_net(rng, {3, 4, 4, 2}, Activation::relu());
  const LayerIntervals li = IntervalPropagation{}(net, Ball{Vector::Zero(3), 0.1, Norm::linf});
  EXPECT_THROW(lipschitz_inf_refined(net, recurjac_forward(net, li, ForwardVariant::f0), li), DomainError);
}

TEST(LocalLipschitz, ZeroRadiusOnLinearNet) {
  const Network net = load_network(fixture("linear_two_layer.json"));
  const Matrix product = net.weights(2) * net.weights(1);
  for (Norm p : {Norm::l1, Norm::l2, Norm::linf})
    for (Method m : {Method::recurjac_b, Method::recurjac_f0, Method::recurjac_f1, Method::fastlip})
      EXPECT_NEAR(local_lipschitz(net, Ball{Vector::Zero(2), 0.0, p}, m).value, induced_norm(product, p),
                  1e-9 * induced_norm(product, p));
}

TEST(LocalLipschitz, ZeroRadiusOnSmoothNet) {
  std::mt19937_64 rng(6);
  const Network net = random_net(rng, {4, 7, 7, 2}, Activation::tanh());
  const Vector s = random_vector(rng, 4);
  for (Norm p : {Norm::l1, Norm::l2, Norm::linf}) {
    // The bound is a norm of |J|; for p = 2 that can exceed the norm of J.
    const double at_center = induced_norm(jacobian_at(net, s).cwiseAbs().eval(), p);
    const double bound = local_lipschitz(net, Ball{s, 0.0, p}, Method::recurjac_b).value;
    EXPECT_GE(bound, at_center - 1e-12);
    EXPECT_LE(bound, at_center * (1 + 1e-9) + 1e-12);
  }
}

TEST(LocalLipschitz, PlateausInGlobalRegime) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const Network net = random_net(rng, random_dims(rng, 4, 4, 10, 2), Activation::leaky_relu(0.2));
    const Vector s = random_vector(rng, net.input_dim());
    const double r = saturation_radius(net, s, Norm::linf);
    ASSERT_LT(r, 1e9);
    const double v1 = local_lipschitz(net, Ball{s, r, Norm::linf}, Method::recurjac_b).value;
    const double v2 = local_lipschitz(net, Ball{s, 2 * r, Norm::linf}, Method::recurjac_b).value;
    EXPECT_EQ(v1, v2);
    EXPECT_LE(v1, global_lipschitz(net, Norm::linf, Method::recurjac_b));
    const LayerIntervals li = IntervalPropagation{}(net, Ball{s, r, Norm::linf});
    if (unstable_count(li) == neuron_count(li)) EXPECT_EQ(v1, global_lipschitz(net, Norm::linf, Method::recurjac_b));
  }
}

TEST(LocalLipschitz, OrderingAndSoundness) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 12; ++t) {
    const Network net = random_net(rng, random_dims(rng, 2 + t % 4, 3, 10, 3),
                                   t % 2 ? Activation::relu() : Activation::leaky_relu(0.1));
    const Vector s = random_vector(rng, net.input_dim());
    for (Norm p : {Norm::l1, Norm::l2, Norm::linf}) {
      for (double r : {0.01, 0.1, 0.5}) {
        const Ball ball{s, r, p};
        const double sampled = sample_lipschitz_lower(net, ball, 300, 42);
        const double rj = local_lipschitz(net, ball, Method::recurjac_b).value;
        const double fl = local_lipschitz(net, ball, Method::fastlip).value;
        const double nv = local_lipschitz(net, ball, Method::naive).value;
        EXPECT_LE(sampled, rj + 1e-9);
        EXPECT_LE(rj, fl * (1 + 1e-12));
        if (p != Norm::l2) EXPECT_LE(fl, nv * (1 + 1e-12));
        for (Method m : {Method::recurjac_f0, Method::recurjac_f1})
          EXPECT_LE(sampled, local_lipschitz(net, ball, m).value + 1e-9);
      }
    }
  }
}

TEST(LocalLipschitz, MonotoneInRadius) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 8; ++t) {
    const Network net = random_net(rng, random_dims(rng, 3 + t % 3, 4, 10, 2), random_activation(rng));
    const Vector s = random_vector(rng, net.input_dim());
    for (Norm p : {Norm::l1, Norm::l2, Norm::linf}) {
      double prev = 0.0;
      for (double r : {0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0}) {
        const double v = local_lipschitz(net, Ball{s, r, p}, Method::recurjac_b).value;
        EXPECT_GE(v, prev - 1e-12 * std::max(1.0, prev));
        prev = v;
      }
    }
  }
}

TEST(Methods, ParseAndPrint) {
  for (Method m : {Method::recurjac_b, Method::recurjac_f0, Method::recurjac_f1, Method::fastlip, Method::naive})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_FALSE(parse_method("crown").has_value());
}
