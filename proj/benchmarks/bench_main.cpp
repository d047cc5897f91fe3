#include <benchmark/benchmark.h>

#include "nimbus/lsa.hpp"
#include "nimbus/neural.hpp"
#include "nimbus/pretrain.hpp"
#include "nimbus/rng.hpp"

#include <Eigen/Dense>

namespace {

using namespace nimbus;
using namespace nimbus::lsa;
using namespace nimbus::neural;
using namespace nimbus::pretrain;

Network bench_network(int inputs, int hidden, int depth) {
  Network net;
  Rng rng(mix_seed(1, kStreamInit));
  int below = inputs;
  for (int i = 0; i < depth; ++i) {
    net.layers.push_back(Layer{init_gaussian(hidden, below, 0.1, rng),
                               Eigen::VectorXd::Zero(hidden), Activation::kSigmoid});
    below = hidden;
  }
  const int out = net.head.total_outputs();
  net.layers.push_back(Layer{init_gaussian(out, below, 0.1, rng),
                             Eigen::VectorXd::Zero(out), Activation::kLinear});
  return net;
}

Eigen::MatrixXd bench_batch(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) x(r, c) = rng.normal();
  return x;
}

SparseMatrix sparse_batch(int rows, int cols, double keep, std::uint64_t seed) {
  Rng rng(seed);
  SparseMatrix x(rows, cols);
  std::vector<Eigen::Triplet<double>> trips;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (rng.uniform() < keep) trips.emplace_back(r, c, 1.0);
  x.setFromTriplets(trips.begin(), trips.end());
  return x;
}

void BM_ForwardBackward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  Network net = bench_network(200, hidden, 1);
  Eigen::MatrixXd x = bench_batch(100, 200, 2);
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(100, net.output_size(), 0.5);
  for (auto _ : state) {
    ForwardTrace trace = forward(net, x);
    Gradients g = backward(net, trace, y);
    benchmark::DoNotOptimize(g.bias.back().sum());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(200)->Arg(1000);

void BM_Cd1Update(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  Rng init(mix_seed(3, kStreamInit));
  Rbm rbm = make_rbm(VisibleType::kGaussian, 200, hidden, init);
  Eigen::MatrixXd batch = bench_batch(100, 200, 4);
  CdConfig config = gaussian_layer_defaults();
  PretrainState st(rbm, config.seed);
  for (auto _ : state) {
    cd1_update(rbm, batch, config, st);
    benchmark::DoNotOptimize(rbm.weights.sum());
  }
}
BENCHMARK(BM_Cd1Update)->Arg(100)->Arg(500);

void BM_TruncatedSvd(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  SparseMatrix x = sparse_batch(400, 300, 0.05, 5);
  for (auto _ : state) {
    LsaModel model = fit_truncated_svd(x, k, 1, SvdOptions{});
    benchmark::DoNotOptimize(model.singular_values.sum());
  }
}
BENCHMARK(BM_TruncatedSvd)->Arg(20)->Arg(100);

void BM_TfIdf(benchmark::State& state) {
  SparseMatrix x = sparse_batch(2000, 500, 0.02, 6);
  TfIdfModel model = TfIdfModel::fit(x);
  for (auto _ : state) {
    SparseMatrix weighted = apply_tfidf(model, x);
    benchmark::DoNotOptimize(weighted.sum());
  }
}
BENCHMARK(BM_TfIdf);

}  // namespace

BENCHMARK_MAIN();
