#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "plab/attacks.hpp"
#include "plab/error.hpp"
#include "plab/ops.hpp"

using namespace plab;

namespace {

// Two-class linear probe: logits z = W x + b on a flat input.
Model linear_probe(const Shape& shape, const std::vector<double>& w0, const std::vector<double>& w1, double b0 = 0.0,
                   double b1 = 0.0) {
  Model m = build_model("linear", shape, 2, 1);
  const std::size_t n = shape_size(shape);
  Tensor w({2, n});
  for (std::size_t i = 0; i < n; ++i) {
    w.at(0, i) = w0[i];
    w.at(1, i) = w1[i];
  }
  m.param("layer1.weight") = w;
  m.param("layer1.bias") = Tensor({2}, {b0, b1});
  return m;
}

struct Probe {
  Model model;
  Tensor x;
  std::size_t label;
  double distance;  // closed-form L2 distance to the decision hyperplane
};

// Random 16-d probe with the boundary close enough that the nearest
// crossing point stays inside [0, 1].
Probe hyperplane_probe(std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> w0(16), w1(16);
  for (std::size_t i = 0; i < 16; ++i) {
    w0[i] = r.uniform(-1.0, 1.0);
    w1[i] = r.uniform(-1.0, 1.0);
  }
  Tensor x({1, 4, 4});
  for (double& v : x.data()) v = r.uniform(0.4, 0.6);
  double wd = 0.0, zd = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    const double d = w1[i] - w0[i];
    zd += d * x[i];
    norm2 += d * d;
  }
  (void)wd;
  // Bias puts x on the class-1 side at distance 0.3 from the boundary.
  const double target = 0.3 * std::sqrt(norm2);
  Model m = linear_probe({1, 4, 4}, w0, w1, 0.0, target - zd);
  return {m, x, 1, 0.3};
}

Tensor random_image(const Shape& shape, std::uint64_t seed) {
  Rng r(seed);
  Tensor t(shape);
  for (double& v : t.data()) v = r.uniform();
  return t;
}

}  // namespace

TEST(AttackConfig, ParseDescriptors) {
  const AttackConfig p = AttackConfig::parse("pgd:eps=0.031,steps=40");
  EXPECT_EQ(p.kind, AttackKind::pgd);
  EXPECT_DOUBLE_EQ(p.eps, 0.031);
  EXPECT_EQ(p.steps, 40u);
  const AttackConfig c = AttackConfig::parse("cw:c=0.01,steps=100,bs=5,kappa=0");
  EXPECT_EQ(c.kind, AttackKind::cw_l2);
  EXPECT_DOUBLE_EQ(c.c_init, 0.01);
  EXPECT_EQ(c.binary_steps, 5u);
  EXPECT_DOUBLE_EQ(c.lr, 0.005);
  EXPECT_EQ(AttackConfig::parse("boundary:iters=2000").steps, 2000u);
  EXPECT_EQ(AttackConfig::parse("contrast").kind, AttackKind::contrast);
  EXPECT_EQ(AttackConfig::parse("pixel:steps=50").steps, 50u);
  EXPECT_DOUBLE_EQ(AttackConfig::parse("translate:eps=3").eps, 3.0);
  const AttackConfig e = AttackConfig::parse("pgd:eps=0.03+eot=10+channel=fc:0.5");
  EXPECT_EQ(e.eot_samples, 10u);
  ASSERT_TRUE(e.channel_in_loop.has_value());
  EXPECT_EQ(*e.channel_in_loop, Channel::fc(0.5));
  const AttackConfig f = AttackConfig::parse("fgsm:eps=0.1");
  EXPECT_EQ(f.steps, 1u);
  EXPECT_DOUBLE_EQ(f.step_size, 0.1);
  EXPECT_FALSE(f.random_start);
}

TEST(AttackConfig, DescriptorRoundTrip) {
  for (const char* d : {"pgd:eps=0.031,steps=40", "cw:c=0.1,steps=100,bs=4,kappa=2+eot=5", "boundary:iters=300",
                        "pixel:steps=7", "pgd:eps=0.03+channel=cd:3"}) {
    const AttackConfig a = AttackConfig::parse(d);
    const AttackConfig b = AttackConfig::parse(a.descriptor());
    EXPECT_EQ(b.descriptor(), a.descriptor()) << d;
  }
}

TEST(AttackConfig, Rejects) {
  EXPECT_THROW(AttackConfig::parse("deepfool"), ConfigError);
  EXPECT_THROW(AttackConfig::parse("pgd:eps"), ConfigError);
  EXPECT_THROW(AttackConfig::parse("pgd:bogus=1"), ConfigError);
  EXPECT_THROW(AttackConfig::parse("pgd:eps=-1"), ConfigError);
  EXPECT_THROW(AttackConfig::parse("pgd+eot=0"), ConfigError);
  AttackConfig a;
  a.eot_samples = 0;
  EXPECT_THROW(a.validate(), ParameterError);
}

TEST(Eot, ParameterErrors) {
  const Model m = build_model("linear", {2}, 2, 1);
  Rng r(1);
  EXPECT_THROW(eot_grad(m, Tensor({2}), 0, NoiseConfig{}, r, 0), ParameterError);
}

TEST(Eot, DeterministicModelIgnoresSamples) {
  const Model m = build_model("smallconv", {3, 8, 8}, 3, 2);
  const Tensor x = random_image({3, 8, 8}, 3);
  Rng a(1), b(2);
  const Tensor g1 = eot_grad(m, x, 1, NoiseConfig{}, a, 1);
  const Tensor g5 = eot_grad(m, x, 1, NoiseConfig{}, b, 5);
  EXPECT_LT(linf_distance(g1, g5), 1e-12);
  Rng c(0);
  EXPECT_EQ(g1, loss_and_grads(m, x, 1, NoiseConfig{}, c).grad_x);
}

TEST(Eot, VarianceShrinksAsOneOverSamples) {
  const Model m = build_model("linear", {1, 4, 4}, 3, 4);
  const Tensor x = random_image({1, 4, 4}, 5);
  NoiseConfig n;
  n.sigma_init = 0.5;
  const auto variance = [&](std::size_t samples) {
    const std::size_t repeats = 4000;
    Tensor s(x.shape()), s2(x.shape());
    Rng r(6 + samples);
    for (std::size_t t = 0; t < repeats; ++t) {
      const Tensor g = eot_grad(m, x, 0, n, r, samples);
      for (std::size_t i = 0; i < g.size(); ++i) {
        s[i] += g[i];
        s2[i] += g[i] * g[i];
      }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) total += s2[i] / repeats - (s[i] / repeats) * (s[i] / repeats);
    return total;
  };
  const double ratio = variance(1) / variance(4);
  EXPECT_NEAR(ratio, 4.0, 0.8);
}

// End-to-end gradient of a linear model behind the fc channel.
TEST(Eot, FrequencyChannelGradientMatchesFiniteDifferences) {
  const Model m = build_model("linear", {1, 8, 8}, 2, 7);
  Tensor x({1, 8, 8});
  Rng r(8);
  for (double& v : x.data()) v = r.uniform(0.45, 0.55);
  const Channel c = Channel::fc(0.5);
  Rng g(0);
  const Tensor grad = eot_grad(m, x, 1, NoiseConfig{}, g, 1, c);
  const auto loss = [&](const Tensor& z) {
    Rng rr(0);
    return loss_and_grads(m, fc_filter(z, 0.5), 1, NoiseConfig{}, rr, Mode::eval, false).loss;
  };
  for (int t = 0; t < 5; ++t) {
    Tensor d(x.shape());
    for (double& v : d.data()) v = r.uniform(-1.0, 1.0);
    const double fd = oracle::directional_fd(loss, x, d, 1e-4);
    EXPECT_LT(std::abs(fd - dot(grad, d)), 1e-3 * std::max(std::abs(fd), 1e-6));
  }
}

TEST(Pgd, LogisticOneStepExample) {
  const Model m = linear_probe({2}, {0.0, 0.0}, {1.0, 0.0});
  AttackConfig cfg = AttackConfig::defaults(AttackKind::pgd);
  cfg.eps = cfg.step_size = 0.1;
  cfg.steps = 1;
  cfg.random_start = false;
  Rng r(1);
  const AttackResult res = pgd(m, Tensor({2}, {0.5, 0.5}), 1, cfg, NoiseConfig{}, r);
  EXPECT_NEAR(res.x_adv[0], 0.4, 1e-12);
  EXPECT_NEAR(res.x_adv[1], 0.5, 1e-12);
}

TEST(Pgd, ZeroStepsReturnsInput) {
  const Model m = build_model("smallconv", {3, 8, 8}, 3, 9);
  const Tensor x = random_image({3, 8, 8}, 10);
  AttackConfig cfg;
  cfg.steps = 0;
  cfg.random_start = false;
  Rng r(2);
  EXPECT_EQ(pgd(m, x, 0, cfg, NoiseConfig{}, r).x_adv, x);
  cfg.eps = 0.0;
  cfg.steps = 10;
  cfg.random_start = true;
  const AttackResult res = pgd(m, x, 0, cfg, NoiseConfig{}, r);
  EXPECT_EQ(res.x_adv, x);
  EXPECT_EQ(res.success, argmax(forward(m, x)) != 0);
}

// 500 random instances across models, budgets, steps, noise and channels.
TEST(Pgd, RespectsBallAndBox) {
  const Model conv = build_model("smallconv", {3, 8, 8}, 3, 11);
  const Model mlp = build_model("mlp", {3, 8, 8}, 3, 12);
  Rng meta(13);
  for (int t = 0; t < 500; ++t) {
    const Model& m = t % 2 ? conv : mlp;
    AttackConfig cfg;
    cfg.eps = meta.uniform(0.0, 0.3);
    cfg.step_size = meta.uniform(0.0, 0.2);
    cfg.steps = 1 + meta.below(5);
    cfg.random_start = meta.below(2) == 1;
    if (t % 7 == 0) cfg.channel_in_loop = Channel::fc(0.5);
    NoiseConfig n;
    if (t % 5 == 0) n.sigma_init = 0.1;
    const Tensor x = random_image({3, 8, 8}, 1000 + t);
    Rng r(t);
    const AttackResult res = pgd(m, x, meta.below(3), cfg, n, r);
    EXPECT_LE(linf_distance(res.x_adv, x), cfg.eps + 1e-6);
    EXPECT_GE(min_value(res.x_adv), 0.0);
    EXPECT_LE(max_value(res.x_adv), 1.0);
    EXPECT_NEAR(res.linf, linf_distance(res.x_adv, x), 1e-12);
    EXPECT_NEAR(res.delta_adv, l2_distance(res.x_adv, x), 1e-12);
  }
}

TEST(Pgd, SameSeedSameResult) {
  const Model m = build_model("smallconv", {3, 8, 8}, 3, 14);
  const Tensor x = random_image({3, 8, 8}, 15);
  NoiseConfig n;
  n.sigma_inner = 0.1;
  AttackConfig cfg = AttackConfig::parse("pgd:eps=0.05,steps=5+eot=3");
  Rng a(3), b(3);
  EXPECT_EQ(pgd(m, x, 0, cfg, n, a).x_adv, pgd(m, x, 0, cfg, n, b).x_adv);
}

TEST(Cw, ZeroConstantReturnsInput) {
  const Probe p = hyperplane_probe(20);
  AttackConfig cfg = AttackConfig::defaults(AttackKind::cw_l2);
  cfg.c_init = 0.0;
  cfg.binary_steps = 0;
  cfg.steps = 50;
  Rng r(1);
  const AttackResult res = cw_l2(p.model, p.x, p.label, cfg, NoiseConfig{}, r);
  EXPECT_FALSE(res.success);
  EXPECT_EQ(res.x_adv, p.x);
}

TEST(Cw, WithinTenPercentOfHyperplaneDistance) {
  for (std::uint64_t seed : {21, 22, 23}) {
    const Probe p = hyperplane_probe(seed);
    ASSERT_EQ(argmax(forward(p.model, p.x)), p.label);
    AttackConfig cfg = AttackConfig::parse("cw:steps=500,bs=5");
    Rng r(seed);
    const AttackResult res = cw_l2(p.model, p.x, p.label, cfg, NoiseConfig{}, r);
    ASSERT_TRUE(res.success);
    EXPECT_NE(argmax(forward(p.model, res.x_adv)), p.label);
    EXPECT_GE(res.delta_adv, p.distance * (1 - 1e-6));
    EXPECT_LE(res.delta_adv, 1.1 * p.distance) << "seed " << seed;
  }
}

TEST(Cw, DistortionNonIncreasingInIterations) {
  const Model m = build_model("smallconv", {3, 8, 8}, 3, 24);
  const Tensor x = random_image({3, 8, 8}, 25);
  const std::size_t label = argmax(forward(m, x));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t steps : {20, 60, 150}) {
    AttackConfig cfg = AttackConfig::parse("cw:c=1,bs=0,lr=0.01");
    cfg.steps = steps;
    Rng r(4);
    const AttackResult res = cw_l2(m, x, label, cfg, NoiseConfig{}, r);
    const double d = res.success ? res.delta_adv : std::numeric_limits<double>::infinity();
    EXPECT_LE(d, prev);
    prev = d;
  }
  EXPECT_TRUE(std::isfinite(prev));
}

TEST(Cw, ConfidenceMarginHonoured) {
  const Probe p = hyperplane_probe(26);
  AttackConfig cfg = AttackConfig::parse("cw:steps=300,bs=5,kappa=1");
  Rng r(5);
  const AttackResult res = cw_l2(p.model, p.x, p.label, cfg, NoiseConfig{}, r);
  ASSERT_TRUE(res.success);
  const Tensor z = forward(p.model, res.x_adv);
  EXPECT_GE(z[0] - z[1], 1.0 - 1e-9);
}

// A success against a noisy channel must hold up under fresh draws, not just
// the draws the attack happened to see.
TEST(Cw, RandomizedSuccessSurvivesFreshVotes) {
  for (std::uint64_t seed : {41, 42, 43}) {
    const Probe p = hyperplane_probe(seed);
    const AttackConfig cfg = AttackConfig::parse("cw:steps=200,bs=5,kappa=1,votes=16+eot=8+channel=uniform:0.05");
    Rng r(seed);
    const AttackResult res = cw_l2(p.model, p.x, p.label, cfg, NoiseConfig{}, r);
    ASSERT_TRUE(res.success);
    const Tensor z = forward(p.model, res.x_adv);
    // The margin is met on sampled logits, so only roughly on the clean ones.
    EXPECT_GE(z[0] - z[1], 0.8) << "seed " << seed;
    std::size_t fooled = 0;
    for (std::uint64_t t = 0; t < 20; ++t) {
      Rng fresh(1000 + t);
      fooled += target_prediction(p.model, res.x_adv, NoiseConfig{}, cfg.channel_in_loop, 16, fresh) != p.label;
    }
    EXPECT_GE(fooled, 19u) << "seed " << seed;
  }
}

TEST(Boundary, AlreadyMisclassifiedReturnsInput) {
  const Probe p = hyperplane_probe(30);
  Rng r(1);
  const AttackResult res = boundary_attack(p.model, p.x, 0, AttackConfig::parse("boundary:iters=10"), NoiseConfig{}, r);
  EXPECT_EQ(res.x_adv, p.x);
  EXPECT_EQ(res.delta_adv, 0.0);
  EXPECT_TRUE(res.success);
}

TEST(Boundary, WithinTwiceHyperplaneDistance) {
  for (std::uint64_t seed : {31, 32}) {
    const Probe p = hyperplane_probe(seed);
    Rng r(seed);
    const AttackResult res =
        boundary_attack(p.model, p.x, p.label, AttackConfig::parse("boundary:iters=2000"), NoiseConfig{}, r);
    ASSERT_TRUE(res.success);
    EXPECT_NE(argmax(forward(p.model, res.x_adv)), p.label);
    EXPECT_LE(res.delta_adv, 2.0 * p.distance) << "seed " << seed;
    EXPECT_GE(min_value(res.x_adv), 0.0);
    EXPECT_LE(max_value(res.x_adv), 1.0);
  }
}

TEST(Boundary, SameSeedSameTrajectory) {
  const Probe p = hyperplane_probe(33);
  const AttackConfig cfg = AttackConfig::parse("boundary:iters=200");
  Rng a(7), b(7);
  const AttackResult r1 = boundary_attack(p.model, p.x, p.label, cfg, NoiseConfig{}, a);
  const AttackResult r2 = boundary_attack(p.model, p.x, p.label, cfg, NoiseConfig{}, b);
  EXPECT_EQ(r1.x_adv, r2.x_adv);
  EXPECT_EQ(r1.queries, r2.queries);
}

TEST(Contrast, Endpoints) {
  const Tensor x = random_image({3, 4, 4}, 40);
  EXPECT_EQ(contrast_reduce(x, 0.0, 0.5), x);
  const Tensor flat = contrast_reduce(x, 1.0, 0.5);
  for (double v : flat.data()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Contrast, DistortionLinearInEps) {
  const Tensor x = random_image({3, 4, 4}, 41);
  const double unit = l2_distance(contrast_reduce(x, 1.0, 0.5), x);
  for (double e : {0.1, 0.25, 0.7}) EXPECT_NEAR(l2_distance(contrast_reduce(x, e, 0.5), x), e * unit, 1e-12);
}

TEST(Contrast, AttackFindsFirstFlip) {
  const Probe p = hyperplane_probe(42);
  Rng r(1);
  const AttackResult res = simple_blackbox(p.model, p.x, p.label, AttackConfig::parse("contrast"), NoiseConfig{}, r);
  if (res.success) {
    EXPECT_NE(argmax(forward(p.model, res.x_adv)), p.label);
    // One grid step less must still be classified correctly.
    const double unit = l2_distance(contrast_reduce(p.x, 1.0, 0.5), p.x);
    const double eps = res.delta_adv / unit;
    EXPECT_EQ(argmax(forward(p.model, contrast_reduce(p.x, eps - 0.01, 0.5))), p.label);
  }
}

TEST(Translate, ShiftWithZeroFill) {
  Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_EQ(translate_image(x, 1, 0), Tensor({1, 3, 3}, {0, 0, 0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(translate_image(x, 0, -1), Tensor({1, 3, 3}, {2, 3, 0, 5, 6, 0, 8, 9, 0}));
  EXPECT_EQ(translate_image(x, 0, 0), x);
  EXPECT_EQ(translate_image(x, 5, 0), Tensor({1, 3, 3}));
}

TEST(Translate, AttackReturnsAShiftedImage) {
  // Class 1 iff the mass sits in the top row.
  std::vector<double> w1(16, 0.0);
  for (std::size_t j = 0; j < 4; ++j) w1[j] = 1.0;
  const Model m = linear_probe({1, 4, 4}, std::vector<double>(16, 0.0), w1, 0.5, 0.0);
  Tensor x({1, 4, 4});
  x.at(0, 0, 1) = 1.0;
  ASSERT_EQ(argmax(forward(m, x)), 1u);
  Rng r(1);
  const AttackResult res = simple_blackbox(m, x, 1, AttackConfig::parse("translate:eps=1"), NoiseConfig{}, r);
  ASSERT_TRUE(res.success);
  // Shifts are tried by increasing |dy| + |dx|; moving up pushes the mass out first.
  EXPECT_EQ(res.x_adv, translate_image(x, -1, 0));
}

TEST(Pixel, ChangesAtMostBudgetPixels) {
  const Model m = build_model("smallconv", {3, 8, 8}, 3, 50);
  const Tensor x = random_image({3, 8, 8}, 51);
  const std::size_t label = argmax(forward(m, x));
  Rng r(1);
  const AttackResult res = simple_blackbox(m, x, label, AttackConfig::parse("pixel:steps=5"), NoiseConfig{}, r);
  std::size_t changed = 0;
  for (std::size_t p = 0; p < 64; ++p) {
    bool diff = false;
    for (std::size_t c = 0; c < 3; ++c) diff |= res.x_adv[c * 64 + p] != x[c * 64 + p];
    changed += diff;
  }
  EXPECT_LE(changed, 5u);
  if (res.success) EXPECT_NE(argmax(forward(m, res.x_adv)), label);
}

TEST(Targets, RandomizedDetection) {
  NoiseConfig n;
  EXPECT_FALSE(randomized_target(n, std::nullopt));
  EXPECT_FALSE(randomized_target(n, Channel::fc(0.5)));
  EXPECT_TRUE(randomized_target(n, Channel::additive(NoiseKind::gauss, 0.1)));
  n.sigma_param = 0.1;
  EXPECT_TRUE(randomized_target(n, std::nullopt));
}

TEST(Targets, DeterministicPredictionIsArgmax) {
  const Model m = build_model("smallconv", {3, 8, 8}, 3, 52);
  const Tensor x = random_image({3, 8, 8}, 53);
  Rng r(1);
  std::size_t q = 0;
  EXPECT_EQ(target_prediction(m, x, NoiseConfig{}, std::nullopt, 11, r, &q), argmax(forward(m, x)));
  EXPECT_EQ(q, 1u);
}
