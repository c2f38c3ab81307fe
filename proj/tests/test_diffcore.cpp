#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "ecc/diffcore/adam.hpp"
#include "ecc/diffcore/archive.hpp"
#include "ecc/diffcore/gaussian.hpp"
#include "ecc/diffcore/gradcheck.hpp"
#include "ecc/diffcore/mlp.hpp"
#include "ecc/error.hpp"
#include "test_util.hpp"

using namespace ecc;
using namespace ecc::diff;

TEST(Mlp, ZeroNetworkGivesZeroOutput) {
  Mlp net("z", {3, 5, 2});
  Tensor x = Tensor::Random(4, 3);
  EXPECT_TRUE(net.infer(x).isZero(0.0));
  Tape t;
  EXPECT_TRUE(t.value(net.forward(t, t.constant(x))).isZero(0.0));
}

TEST(Mlp, SingleAffineLayer) {
  Mlp net("a", {1, 1});
  net.layers()[0].weight.value(0, 0) = 2.0;
  net.layers()[0].bias.value(0, 0) = 1.0;
  Tensor x(1, 1);
  x << 3.0;
  EXPECT_DOUBLE_EQ(net.infer(x)(0, 0), 7.0);
}

TEST(Mlp, TwoLayerTanhMatchesHandRecurrence) {
  Rng rng(0);
  Mlp net = Mlp::uniform("h", {3, 4, 2}, rng);
  Tensor x = Tensor::Ones(1, 3);
  const auto& L = net.layers();
  // hand evaluation with scalar loops
  std::vector<double> h(4), y(2);
  for (int j = 0; j < 4; ++j) {
    double s = L[0].bias.value(0, j);
    for (int i = 0; i < 3; ++i) s += L[0].weight.value(j, i) * 1.0;
    h[j] = std::tanh(s);
  }
  for (int k = 0; k < 2; ++k) {
    double s = L[1].bias.value(0, k);
    for (int j = 0; j < 4; ++j) s += L[1].weight.value(k, j) * h[j];
    y[k] = s;
  }
  Tensor out = net.infer(x);
  Tape t;
  Tensor taped = t.value(net.forward(t, t.constant(x)));
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(out(0, k), y[k], 1e-14);
    EXPECT_NEAR(taped(0, k), y[k], 1e-14);
  }
}

TEST(Mlp, UniformInitRespectsFanInBound) {
  Rng rng(1);
  Mlp net = Mlp::uniform("u", {16, 8, 3}, rng);
  EXPECT_LE(net.layers()[0].weight.value.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
  EXPECT_LE(net.layers()[1].weight.value.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(8.0));
  EXPECT_TRUE(net.layers()[0].bias.value.isZero(0.0));
}

TEST(Mlp, InputDimensionMismatchThrows) {
  Mlp net("m", {3, 2});
  Tape t;
  EXPECT_THROW(net.forward(t, t.constant(Tensor::Zero(1, 4))), ConfigError);
}

TEST(Tanh, FastFormAgreesWithLibrary) {
  Tensor x = Eigen::RowVectorXd::LinSpaced(2001, -30.0, 30.0);
  Tensor y = tanh_of(x);
  for (Eigen::Index i = 0; i < x.cols(); ++i) EXPECT_NEAR(y(0, i), std::tanh(x(0, i)), 1e-15);
}

TEST(Backward, LinearGradientReplicatesInput) {
  Parameter w("W", Tensor::Random(3, 4));
  Tensor x = Tensor::Random(1, 4);
  Tape t;
  Var loss = t.sum(t.linear(t.constant(x), t.param(w)));
  t.backward(loss);
  for (int r = 0; r < 3; ++r) EXPECT_TRUE(w.grad.row(r).isApprox(x.row(0)));
}

TEST(Backward, AbsSubgradientIsZeroAtKink) {
  Tape t;
  Var y = t.input(Tensor::Zero(1, 3));
  t.backward(t.sum(t.abs(y)));
  EXPECT_TRUE(t.grad(y).isZero(0.0));
}

TEST(Backward, NonScalarLossThrows) {
  Tape t;
  Var y = t.input(Tensor::Ones(2, 2));
  EXPECT_THROW(t.backward(y), UsageError);
}

TEST(Backward, FrozenParametersReceiveNoGradient) {
  Rng rng(2);
  Mlp a = Mlp::uniform("a", {3, 4, 3}, rng);
  Mlp b = Mlp::uniform("b", {3, 4, 1}, rng);
  a.set_frozen(true);
  Tape t;
  Var x = t.input(Tensor::Random(5, 3));
  t.backward(t.mean(b.forward(t, a.forward(t, x))));
  for (auto* p : a.parameters()) EXPECT_TRUE(p->grad.isZero(0.0)) << p->name;
  bool any = false;
  for (auto* p : b.parameters()) any = any || !p->grad.isZero(0.0);
  EXPECT_TRUE(any);
  EXPECT_FALSE(t.grad(x).isZero(0.0));  // gradient still flows through the frozen net
}

TEST(GradCheck, RandomTwoLayerNetL1Loss) {
  Rng rng(3);
  Mlp net = Mlp::uniform("g", {4, 6, 3}, rng);
  Tensor x = Tensor::Random(7, 4), y = Tensor::Random(7, 3) * 5.0;  // targets well away from outputs
  auto params = net.parameters();
  auto rep = finite_diff_check(
      [&](Tape& t) { return t.mean(t.abs(t.sub(net.forward(t, t.constant(x)), t.constant(y)))); }, params);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst_parameter;
}

TEST(GradCheck, LinearFunctionAtMachinePrecision) {
  Parameter w("w", Tensor::Random(2, 3));
  std::vector<Parameter*> ps{&w};
  Tensor x = Tensor::Random(4, 3);
  auto rep = finite_diff_check([&](Tape& t) { return t.sum(t.linear(t.constant(x), t.param(w))); }, ps);
  EXPECT_LT(rep.max_rel_error, 1e-8);
}

TEST(GradCheck, FrozenEntriesReportZero) {
  Rng rng(4);
  Mlp a = Mlp::uniform("a", {2, 3, 2}, rng);
  a.set_frozen(true);
  Parameter w("w", Tensor::Random(1, 2));
  std::vector<Parameter*> ps = a.parameters();
  ps.push_back(&w);
  Tensor x = Tensor::Random(3, 2);
  auto rep = finite_diff_check(
      [&](Tape& t) { return t.sum(t.linear(a.forward(t, t.constant(x)), t.param(w))); }, ps);
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) EXPECT_TRUE(rep.analytic[i].isZero(0.0));
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

TEST(GradCheck, EveryTapeOpAgreesWithCentralDifferences) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rnd = [&](int r, int c) {
    Tensor t(r, c);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
    return t;
  };
  Parameter a("a", rnd(3, 4)), b("b", rnd(3, 4)), m("m", rnd(3, 2)), s("s", rnd(3, 2));
  std::vector<Parameter*> ps{&a, &b, &m, &s};
  Tensor sc = rnd(1, 4), sh = rnd(1, 4);
  auto rep = finite_diff_check(
      [&](Tape& t) {
        Var A = t.param(a), B = t.param(b);
        Var e = t.add(t.mul(t.tanh(A), t.exp(B)), t.softplus(t.sub(A, B)));
        e = t.affine_cols(t.scale(t.add_scalar(e, 0.3), 1.7), sc, sh);
        Var kl = t.gaussian_kl(t.param(m), t.clamp(t.param(s), -5, 2), t.slice_cols(e, 0, 2), t.slice_cols(e, 2, 2));
        Var bce = t.bce_logits(t.row_sum(e), 1.0);
        Var cat = t.concat_cols(kl, bce);
        return t.weighted_sum({{0.5, t.mean(cat)}, {2.0, t.mean_rows(t.abs(t.add_scalar(e, 10.0)))}});
      },
      ps);
  EXPECT_LT(rep.max_rel_error, 1e-6) << rep.worst_parameter;
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter p("p", Tensor::Constant(2, 2, 0.5));
  std::vector<Parameter*> ps{&p};
  Adam opt(ps, {});
  opt.step();
  EXPECT_TRUE(p.value.isApprox(Tensor::Constant(2, 2, 0.5), 0.0));
  EXPECT_EQ(opt.state().step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", Tensor::Constant(1, 1, 1.0));
  std::vector<Parameter*> ps{&p};
  Adam opt(ps, {0.001});
  p.grad(0, 0) = 1.0;
  opt.step();
  // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
  EXPECT_NEAR(p.value(0, 0), 1.0 - 0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, RepeatedStepsMoveAgainstGradient) {
  Parameter p("p", Tensor::Zero(1, 3));
  std::vector<Parameter*> ps{&p};
  Adam opt(ps, {0.01});
  Tensor g(1, 3);
  g << 1.0, -2.0, 0.5;
  Tensor prev = p.value;
  for (int k = 0; k < 2; ++k) {
    p.grad = g;
    opt.step();
    for (int i = 0; i < 3; ++i) EXPECT_LT((p.value(0, i) - prev(0, i)) * g(0, i), 0.0);
    prev = p.value;
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Parameter p("layer.W", Tensor::Zero(1, 2)), q("other", Tensor::Zero(1, 1));
  std::vector<Parameter*> ps{&q, &p};
  Adam opt(ps, {});
  p.grad(0, 1) = std::nan("");
  try {
    opt.step();
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.W"), std::string::npos);
  }
  EXPECT_TRUE(p.value.isZero(0.0));
}

TEST(Adam, FrozenParameterIsSkipped) {
  Parameter p("p", Tensor::Ones(1, 1));
  p.frozen = true;
  p.grad(0, 0) = 3.0;
  std::vector<Parameter*> ps{&p};
  Adam opt(ps, {});
  opt.step();
  EXPECT_EQ(p.value(0, 0), 1.0);
}

TEST(GaussianKl, KnownValues) {
  auto g = [](double m, double ls) { return DiagGaussian{Vector::Constant(1, m), Vector::Constant(1, ls)}; };
  EXPECT_DOUBLE_EQ(gaussian_kl(g(0, 0), g(0, 0)), 0.0);
  EXPECT_NEAR(gaussian_kl(g(1, 0), g(0, 0)), 0.5, 1e-15);
  EXPECT_NEAR(gaussian_kl(g(0, std::log(2.0)), g(0, 0)), 1.5 - std::log(2.0), 1e-15);
}

TEST(GaussianKl, MatchesMonteCarloOnKnownValues) {
  Rng rng(6);
  auto g = [](double m, double ls) { return DiagGaussian{Vector::Constant(1, m), Vector::Constant(1, ls)}; };
  EXPECT_NEAR(testutil::monte_carlo_kl(g(1, 0), g(0, 0), 100000, rng), 0.5, 0.02);
  EXPECT_NEAR(testutil::monte_carlo_kl(g(0, std::log(2.0)), g(0, 0), 100000, rng), 1.5 - std::log(2.0), 0.03);
}

TEST(GaussianKl, DimensionMismatchThrows) {
  DiagGaussian p{Vector::Zero(2), Vector::Zero(2)}, q{Vector::Zero(3), Vector::Zero(3)};
  EXPECT_THROW(gaussian_kl(p, q), UsageError);
}

TEST(GaussianKl, TapeVersionAgreesWithValueVersion) {
  Rng rng(7);
  Tensor mp = Tensor::Random(5, 3), lp = Tensor::Random(5, 3), mq = Tensor::Random(5, 3), lq = Tensor::Random(5, 3);
  Tape t;
  Var kl = t.gaussian_kl(t.constant(mp), t.constant(lp), t.constant(mq), t.constant(lq));
  for (int r = 0; r < 5; ++r) {
    DiagGaussian p{mp.row(r).transpose(), lp.row(r).transpose()}, q{mq.row(r).transpose(), lq.row(r).transpose()};
    EXPECT_NEAR(t.value(kl)(r, 0), gaussian_kl(p, q), 1e-13);
  }
}

TEST(GaussianHead, LogStdIsClamped) {
  Tensor raw(1, 4);
  raw << 0.3, -1.0, -9.0, 7.0;
  auto [mean, ls] = gaussian_head(raw, 2);
  EXPECT_EQ(mean(0, 0), 0.3);
  EXPECT_EQ(ls(0, 0), kLogStdMin);
  EXPECT_EQ(ls(0, 1), kLogStdMax);
}

TEST(Reparam, HandValues) {
  DiagGaussian g{Vector::Zero(2), Vector::Zero(2)};
  g.mean << 1.0, 2.0;
  g.log_std << std::log(2.0), 0.0;
  Vector eps(2);
  eps << 1.0, -1.0;
  Vector s = reparam_sample(g, eps);
  EXPECT_NEAR(s[0], 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0, 1e-15);
  Vector z = reparam_sample(g, Vector::Zero(2));
  EXPECT_EQ(std::memcmp(z.data(), g.mean.data(), 2 * sizeof(double)), 0);
  DiagGaussian unit{g.mean, Vector::Zero(2)};
  EXPECT_TRUE(reparam_sample(unit, eps).isApprox(g.mean + eps, 0.0));
}

TEST(Reparam, NoiseLengthMismatchThrows) {
  DiagGaussian g{Vector::Zero(2), Vector::Zero(2)};
  EXPECT_THROW(reparam_sample(g, Vector::Zero(3)), UsageError);
}

TEST(Bce, KnownValues) {
  EXPECT_NEAR(bce_logits(0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_logits(0.0, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_logits(5.0, 1.0), std::log1p(std::exp(-5.0)), 1e-15);
  EXPECT_NEAR(bce_logits(5.0, 1.0), 0.00672, 1e-5);
  EXPECT_TRUE(std::isfinite(bce_logits(800.0, 0.0)));
  EXPECT_NEAR(bce_logits(-800.0, 0.0), 0.0, 1e-300);
}

TEST(Archive, RoundTripIsBitExact) {
  Rng rng(8);
  Mlp net = Mlp::uniform("net", {5, 7, 3}, rng);
  Standardizer st = Standardizer::fit(Tensor::Random(40, 5));
  Archive a;
  a.set_attr("kind", "test");
  a.put_mlp(net);
  a.put_standardizer("st", st);
  auto path = testutil::temp_dir("archive") / "a.bin";
  a.save(path);
  Archive b = Archive::load(path);
  EXPECT_TRUE(a == b);
  Mlp back = b.get_mlp("net");
  EXPECT_TRUE(back.equal_bytes(net));
  EXPECT_EQ(back.dims(), net.dims());
  auto path2 = path.parent_path() / "b.bin";
  b.save(path2);
  EXPECT_EQ(testutil::read_bytes(path), testutil::read_bytes(path2));
}

TEST(Archive, MissingAndCorruptFiles) {
  auto dir = testutil::temp_dir("archive_bad");
  EXPECT_THROW(Archive::load(dir / "none.bin"), MissingInputError);
  testutil::write_text(dir / "junk.bin", "not a snapshot");
  EXPECT_THROW(Archive::load(dir / "junk.bin"), ParseError);
  Archive a;
  a.put("t", Tensor::Ones(3, 3));
  a.save(dir / "ok.bin");
  std::string bytes = testutil::read_bytes(dir / "ok.bin");
  testutil::write_text(dir / "cut.bin", bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(Archive::load(dir / "cut.bin"), ParseError);
}

TEST(Determinism, ForwardBackwardRepeatBitExactly) {
  Rng rng(9);
  Mlp net = Mlp::uniform("d", {4, 8, 2}, rng);
  Tensor x = Tensor::Random(6, 4);
  auto run = [&] {
    for (auto* p : net.parameters()) p->zero_grad();
    Tape t;
    Var out = net.forward(t, t.constant(x));
    t.backward(t.mean(t.mul(out, out)));
    std::vector<Tensor> g;
    for (auto* p : net.parameters()) g.push_back(p->grad);
    return std::make_pair(Tensor(t.value(out)), g);
  };
  auto [o1, g1] = run();
  auto [o2, g2] = run();
  EXPECT_EQ(std::memcmp(o1.data(), o2.data(), sizeof(double) * o1.size()), 0);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_EQ(std::memcmp(g1[i].data(), g2[i].data(), sizeof(double) * g1[i].size()), 0);
  }
}
