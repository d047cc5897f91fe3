#include "doctest.h"

#include "nimbus/error.hpp"
#include "nimbus/pretrain.hpp"
#include "nimbus/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

using namespace nimbus;
using namespace nimbus::pretrain;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Loop-based CD-1 for one hidden unit over two visible units, replaying the
/// library's documented draw order (hidden row-major, then visible row-major
/// for Bernoulli reconstructions) on its own generator instance.
struct ScalarCd {
  bool gaussian;
  double w0, w1, a0, a1, b;
  double vw0 = 0, vw1 = 0, va0 = 0, va1 = 0, vb = 0;
  Rng rng;

  ScalarCd(bool gaussian_visible, double w0_, double w1_, std::uint64_t seed)
      : gaussian(gaussian_visible), w0(w0_), w1(w1_), a0(0), a1(0), b(0),
        rng(mix_seed(seed, kStreamSample)) {}

  void update(const std::vector<std::array<double, 2>>& batch, double eps, double lambda,
              double mu) {
    const std::size_t n = batch.size();
    std::vector<double> h_pos(n), h_samp(n), h_neg(n);
    std::vector<std::array<double, 2>> v_neg(n);
    for (std::size_t r = 0; r < n; ++r) {
      h_pos[r] = logistic(b + w0 * batch[r][0] + w1 * batch[r][1]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      h_samp[r] = rng.uniform() < h_pos[r] ? 1.0 : 0.0;
    }
    for (std::size_t r = 0; r < n; ++r) {
      v_neg[r][0] = a0 + w0 * h_samp[r];
      v_neg[r][1] = a1 + w1 * h_samp[r];
      if (!gaussian) {
        v_neg[r][0] = logistic(v_neg[r][0]);
        v_neg[r][1] = logistic(v_neg[r][1]);
      }
    }
    if (!gaussian) {
      for (std::size_t r = 0; r < n; ++r) {
        v_neg[r][0] = rng.uniform() < v_neg[r][0] ? 1.0 : 0.0;
        v_neg[r][1] = rng.uniform() < v_neg[r][1] ? 1.0 : 0.0;
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      h_neg[r] = logistic(b + w0 * v_neg[r][0] + w1 * v_neg[r][1]);
    }

    double pos0 = 0, pos1 = 0, neg0 = 0, neg1 = 0, da0 = 0, da1 = 0, db = 0;
    for (std::size_t r = 0; r < n; ++r) {
      pos0 += h_pos[r] * batch[r][0];
      pos1 += h_pos[r] * batch[r][1];
      neg0 += h_neg[r] * v_neg[r][0];
      neg1 += h_neg[r] * v_neg[r][1];
      da0 += batch[r][0] - v_neg[r][0];
      da1 += batch[r][1] - v_neg[r][1];
      db += h_pos[r] - h_neg[r];
    }
    const double inv = 1.0 / static_cast<double>(n);
    vw0 = mu * vw0 + eps * ((pos0 - neg0) * inv - lambda * w0);
    vw1 = mu * vw1 + eps * ((pos1 - neg1) * inv - lambda * w1);
    va0 = mu * va0 + eps * inv * da0;
    va1 = mu * va1 + eps * inv * da1;
    vb = mu * vb + eps * inv * db;
    w0 += vw0;
    w1 += vw1;
    a0 += va0;
    a1 += va1;
    b += vb;
  }
};

Eigen::MatrixXd two_pattern_rows(int copies) {
  Eigen::MatrixXd data(2 * copies, 4);
  for (int i = 0; i < copies; ++i) {
    data.row(2 * i) << 1, 1, 0, 0;
    data.row(2 * i + 1) << 0, 0, 1, 1;
  }
  return data;
}

/// Unnormalized p(v) summed over all hidden configurations, directly from the
/// joint energy E(v,h) = -a.v - b.h - h.Wv.
double joint_marginal(const Rbm& rbm, const Eigen::VectorXd& v) {
  const int hidden = rbm.hidden();
  double total = 0.0;
  for (int mask = 0; mask < (1 << hidden); ++mask) {
    Eigen::VectorXd h(hidden);
    for (int j = 0; j < hidden; ++j) h[j] = (mask >> j) & 1;
    const double energy =
        -rbm.visible_bias.dot(v) - rbm.hidden_bias.dot(h) - h.dot(rbm.weights * v);
    total += std::exp(-energy);
  }
  return total;
}

}  // namespace

TEST_CASE("config defaults for the two stack positions") {
  CdConfig g = gaussian_layer_defaults();
  CHECK(g.epochs == 200);
  CHECK(g.learning_rate == 0.001);
  CdConfig b = bernoulli_layer_defaults();
  CHECK(b.epochs == 50);
  CHECK(b.learning_rate == 0.1);
  for (const CdConfig& c : {g, b}) {
    CHECK(c.weight_decay == 0.0002);
    CHECK(c.momentum.initial == 0.5);
    CHECK(c.momentum.later == 0.9);
    CHECK(c.momentum.switch_epoch == 5);
    CHECK(c.batch_size == 100);
  }
}

TEST_CASE("hidden probabilities follow logistic(b + Wv)") {
  Rbm rbm;
  rbm.visible_type = VisibleType::kBernoulli;
  rbm.weights = Eigen::MatrixXd::Constant(1, 1, std::log(3.0));
  rbm.visible_bias = Eigen::VectorXd::Zero(1);
  rbm.hidden_bias = Eigen::VectorXd::Zero(1);

  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(1, 1);
  Rng rng(1);
  HiddenSample sample = hidden_given_visible(rbm, v, rng);
  CHECK(sample.probs(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK((sample.samples(0, 0) == 0.0 || sample.samples(0, 0) == 1.0));

  rbm.hidden_bias[0] = 50.0;
  HiddenSample saturated = hidden_given_visible(rbm, v, rng);
  CHECK(saturated.probs(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(saturated.samples(0, 0) == 1.0);
}

TEST_CASE("gaussian visibles reconstruct to the conditional mean") {
  Rbm rbm;
  rbm.visible_type = VisibleType::kGaussian;
  rbm.weights = Eigen::MatrixXd::Constant(1, 1, 2.0);
  rbm.visible_bias = Eigen::VectorXd::Ones(1);
  rbm.hidden_bias = Eigen::VectorXd::Zero(1);

  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(1, 1);
  Rng rng(2);
  Eigen::MatrixXd v = visible_given_hidden(rbm, h, rng);
  CHECK(v(0, 0) == 3.0);
}

TEST_CASE("bernoulli visibles come back as samples") {
  Rbm rbm;
  rbm.visible_type = VisibleType::kBernoulli;
  rbm.weights = Eigen::MatrixXd::Zero(1, 3);
  rbm.visible_bias = Eigen::VectorXd::Constant(3, 50.0);
  rbm.hidden_bias = Eigen::VectorXd::Zero(1);

  Rng rng(3);
  Eigen::MatrixXd v = visible_given_hidden(rbm, Eigen::MatrixXd::Zero(5, 1), rng);
  CHECK(v == Eigen::MatrixXd::Ones(5, 3));
}

TEST_CASE("a saturated fixed point leaves only the decay term") {
  Rbm rbm;
  rbm.visible_type = VisibleType::kBernoulli;
  rbm.weights = Eigen::MatrixXd::Constant(1, 1, 0.8);
  rbm.visible_bias = Eigen::VectorXd::Constant(1, 50.0);
  rbm.hidden_bias = Eigen::VectorXd::Constant(1, 50.0);

  CdConfig config;
  config.learning_rate = 0.1;
  config.weight_decay = 0.0002;
  PretrainState state(rbm, 7);
  cd1_update(rbm, Eigen::MatrixXd::Ones(3, 1), config, state);

  CHECK(rbm.weights(0, 0) == doctest::Approx(0.8 * (1.0 - 0.1 * 0.0002)).epsilon(1e-15));
  CHECK(rbm.visible_bias[0] == 50.0);
  CHECK(rbm.hidden_bias[0] == 50.0);
}

TEST_CASE("a zero learning rate is a no-op") {
  Rng init(mix_seed(5, kStreamInit));
  Rbm rbm = make_rbm(VisibleType::kBernoulli, 4, 3, init);
  const Rbm before = rbm;
  CdConfig config;
  config.learning_rate = 0.0;
  PretrainState state(rbm, 9);
  cd1_update(rbm, two_pattern_rows(2), config, state);
  CHECK(rbm.weights == before.weights);
  CHECK(rbm.visible_bias == before.visible_bias);
  CHECK(rbm.hidden_bias == before.hidden_bias);
}

TEST_CASE("cd-1 matches a scalar oracle through the momentum switch") {
  const std::uint64_t seed = 1234;
  const std::vector<std::array<double, 2>> batch{{1, 0}, {0, 1}, {1, 1}, {0, 0}};
  Eigen::MatrixXd ebatch(4, 2);
  for (int r = 0; r < 4; ++r) ebatch.row(r) << batch[r][0], batch[r][1];

  for (bool gaussian : {true, false}) {
    CAPTURE(gaussian);
    Rbm rbm;
    rbm.visible_type = gaussian ? VisibleType::kGaussian : VisibleType::kBernoulli;
    rbm.weights = Eigen::MatrixXd(1, 2);
    rbm.weights << 0.05, -0.03;
    rbm.visible_bias = Eigen::VectorXd::Zero(2);
    rbm.hidden_bias = Eigen::VectorXd::Zero(1);

    CdConfig config;
    config.learning_rate = 0.1;
    config.weight_decay = 0.0002;
    config.seed = seed;
    PretrainState state(rbm, seed);

    ScalarCd oracle(gaussian, 0.05, -0.03, seed);

    for (int epoch = 1; epoch <= 8; ++epoch) {
      state.epoch = epoch;
      const double mu = optim::momentum_at_epoch(config.momentum, epoch);
      cd1_update(rbm, ebatch, config, state);
      oracle.update(batch, 0.1, 0.0002, mu);

      CHECK(rbm.weights(0, 0) == doctest::Approx(oracle.w0).epsilon(1e-12));
      CHECK(rbm.weights(0, 1) == doctest::Approx(oracle.w1).epsilon(1e-12));
      CHECK(rbm.visible_bias[0] == doctest::Approx(oracle.a0).epsilon(1e-12));
      CHECK(rbm.visible_bias[1] == doctest::Approx(oracle.a1).epsilon(1e-12));
      CHECK(rbm.hidden_bias[0] == doctest::Approx(oracle.b).epsilon(1e-12));
    }
  }
}

TEST_CASE("free energy closed forms") {
  SUBCASE("zero parameters give -H ln 2") {
    Rbm rbm;
    rbm.visible_type = VisibleType::kBernoulli;
    rbm.weights = Eigen::MatrixXd::Zero(3, 4);
    rbm.visible_bias = Eigen::VectorXd::Zero(4);
    rbm.hidden_bias = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
    CHECK(free_energy(rbm, v) == doctest::Approx(-3.0 * std::log(2.0)).epsilon(1e-12));

    rbm.visible_type = VisibleType::kGaussian;
    CHECK(free_energy(rbm, v) == doctest::Approx(-3.0 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("gaussian quadratic term") {
    Rbm rbm;
    rbm.visible_type = VisibleType::kGaussian;
    rbm.weights = Eigen::MatrixXd::Zero(1, 2);
    rbm.visible_bias = Eigen::VectorXd::Ones(2);
    rbm.hidden_bias = Eigen::VectorXd::Constant(1, -1000.0);  // kills the softplus
    Eigen::VectorXd v(2);
    v << 3.0, 1.0;
    CHECK(free_energy(rbm, v) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("a visible bias shift subtracts the overlap") {
    Rng rng(31);
    Rbm rbm = make_rbm(VisibleType::kBernoulli, 4, 2, rng);
    rbm.visible_bias << 0.1, -0.2, 0.3, 0.0;
    rbm.hidden_bias << 0.05, -0.05;
    Eigen::VectorXd v(4);
    v << 1, 0, 1, 1;
    Eigen::VectorXd delta(4);
    delta << 0.5, -1.0, 0.25, 2.0;
    Rbm shifted = rbm;
    shifted.visible_bias += delta;
    CHECK(free_energy(shifted, v) ==
          doctest::Approx(free_energy(rbm, v) - delta.dot(v)).epsilon(1e-12));
  }
}

TEST_CASE("free energy agrees with direct enumeration of the joint") {
  Rng rng(37);
  Rbm rbm = make_rbm(VisibleType::kBernoulli, 5, 3, rng);
  rbm.weights *= 20.0;  // spread the weights to O(1)
  for (int i = 0; i < 5; ++i) rbm.visible_bias[i] = rng.normal() * 0.5;
  for (int j = 0; j < 3; ++j) rbm.hidden_bias[j] = rng.normal() * 0.5;

  for (int mask = 0; mask < (1 << 5); ++mask) {
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v[i] = (mask >> i) & 1;
    const double direct = joint_marginal(rbm, v);
    const double via_free_energy = std::exp(-free_energy(rbm, v));
    CHECK(std::abs(direct - via_free_energy) / direct < 1e-10);
  }
}

TEST_CASE("hidden units are conditionally independent given the visibles") {
  Rng rng(41);
  Rbm rbm = make_rbm(VisibleType::kBernoulli, 6, 4, rng);
  Eigen::MatrixXd v(1, 6);
  v << 1, 0, 1, 1, 0, 1;

  Rng r1(5), r2(5);
  HiddenSample base = hidden_given_visible(rbm, v, r1);
  Rbm perturbed = rbm;
  perturbed.weights.row(2).array() += 3.0;  // only unit 2's inputs change
  HiddenSample after = hidden_given_visible(perturbed, v, r2);
  for (int j = 0; j < 4; ++j) {
    if (j == 2) {
      CHECK(after.probs(0, j) != base.probs(0, j));
    } else {
      CHECK(after.probs(0, j) == base.probs(0, j));
    }
  }
}

TEST_CASE("training lifts the model probability of the data patterns") {
  Eigen::MatrixXd data = two_pattern_rows(10);

  CdConfig config = bernoulli_layer_defaults();
  config.epochs = 60;
  config.batch_size = 10;
  config.seed = 3;

  Rng init(mix_seed(config.seed, kStreamInit));
  Rbm before = make_rbm(VisibleType::kBernoulli, 4, 3, init);
  Rbm after = train_rbm(VisibleType::kBernoulli, 3, data, config);

  auto data_mass = [](const Rbm& rbm) {
    double z = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
      Eigen::VectorXd v(4);
      for (int i = 0; i < 4; ++i) v[i] = (mask >> i) & 1;
      z += std::exp(-free_energy(rbm, v));
    }
    Eigen::VectorXd p1(4), p2(4);
    p1 << 1, 1, 0, 0;
    p2 << 0, 0, 1, 1;
    return (std::exp(-free_energy(rbm, p1)) + std::exp(-free_energy(rbm, p2))) / z;
  };
  CHECK(data_mass(after) > data_mass(before));
  CHECK(reconstruction_error(after, data) < reconstruction_error(before, data));
}

TEST_CASE("train_rbm is reproducible") {
  Eigen::MatrixXd data = two_pattern_rows(5);
  CdConfig config = bernoulli_layer_defaults();
  config.epochs = 5;
  config.batch_size = 4;
  config.seed = 11;
  Rbm a = train_rbm(VisibleType::kBernoulli, 2, data, config);
  Rbm b = train_rbm(VisibleType::kBernoulli, 2, data, config);
  CHECK(a.weights == b.weights);
  CHECK(a.visible_bias == b.visible_bias);
  CHECK(a.hidden_bias == b.hidden_bias);
}

TEST_CASE("greedy stacking alternates visible types and chains widths") {
  Rng rng(47);
  Eigen::MatrixXd data(20, 4);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 4; ++c) data(r, c) = rng.normal();

  std::vector<CdConfig> configs(2);
  configs[0] = gaussian_layer_defaults();
  configs[0].epochs = 2;
  configs[0].batch_size = 10;
  configs[1] = bernoulli_layer_defaults();
  configs[1].epochs = 2;
  configs[1].batch_size = 10;

  std::vector<Rbm> rbms = greedy_pretrain({4, 3, 2}, data, configs, 13);
  REQUIRE(rbms.size() == 2);
  CHECK(rbms[0].visible_type == VisibleType::kGaussian);
  CHECK(rbms[0].weights.rows() == 3);
  CHECK(rbms[0].weights.cols() == 4);
  CHECK(rbms[1].visible_type == VisibleType::kBernoulli);
  CHECK(rbms[1].weights.rows() == 2);
  CHECK(rbms[1].weights.cols() == 3);

  CHECK_THROWS_AS(greedy_pretrain({4}, data, {}, 13), ConfigError);
  CHECK_THROWS_AS(greedy_pretrain({4, 3, 2}, data, {configs[0]}, 13), ConfigError);
  Eigen::MatrixXd narrow(20, 3);
  narrow.setZero();
  CHECK_THROWS_AS(greedy_pretrain({4, 3}, narrow, {configs[0]}, 13), DataError);
}

TEST_CASE("unrolling copies rbm parameters into sigmoid layers bit for bit") {
  Rng rng(53);
  Eigen::MatrixXd data(16, 5);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 5; ++c) data(r, c) = rng.normal();

  std::vector<CdConfig> configs(2);
  configs[0] = gaussian_layer_defaults();
  configs[0].epochs = 1;
  configs[0].batch_size = 8;
  configs[1] = bernoulli_layer_defaults();
  configs[1].epochs = 1;
  configs[1].batch_size = 8;
  std::vector<Rbm> rbms = greedy_pretrain({5, 4, 3}, data, configs, 19);

  neural::HeadSpec head{{2}, 1};
  Rng out_rng(mix_seed(19, kStreamInit));
  neural::Network net = unroll_to_network(rbms, head, out_rng);

  REQUIRE(net.layers.size() == 3);
  CHECK(net.input_size() == 5);
  CHECK(net.output_size() == 3);
  for (int i = 0; i < 2; ++i) {
    CHECK(net.layers[i].activation == neural::Activation::kSigmoid);
    CHECK(net.layers[i].weights == rbms[i].weights);
    CHECK(net.layers[i].bias == rbms[i].hidden_bias);
  }
  CHECK(net.layers[2].activation == neural::Activation::kLinear);
  CHECK(net.layers[2].bias.isZero(0.0));

  // Mismatched chaining is rejected.
  std::vector<Rbm> broken = rbms;
  broken[1].weights = Eigen::MatrixXd::Zero(3, 5);
  CHECK_THROWS_AS(unroll_to_network(broken, head, out_rng), ConfigError);
}
