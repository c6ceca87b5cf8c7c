#include <cmath>
#include <vector>

#include "chyvae/nn.hpp"
#include "doctest.h"

using namespace chyvae;
using nn::NetConfig;
using nn::PosteriorMode;

namespace {

nn::ModelParams zeroed_params(const NetConfig& cfg) {
  RngStream rng(1);
  nn::ModelParams p = nn::init_params(cfg, rng);
  for (auto& t : p.tensors)
    for (auto& v : t.v) v = 0.0;
  return p;
}

double logit(double y) { return std::log(y / (1.0 - y)); }

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("zero weights give mu = 0 and L = log(2) I") {
  NetConfig cfg{6, {5}, 3, PosteriorMode::kFullCholesky};
  auto params = zeroed_params(cfg);
  auto post = nn::encoder_forward(params, std::vector<double>(6, 0.3));
  for (double m : post.mu) CHECK(m == 0.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) CHECK(post.chol(i, j) == doctest::Approx(std::log(2.0)));
      else CHECK(post.chol(i, j) == 0.0);
    }
  }
}

TEST_CASE("diagonal mode yields exactly zero off-diagonals") {
  NetConfig cfg{6, {5}, 3, PosteriorMode::kDiagonal};
  RngStream rng(2);
  auto params = nn::init_params(cfg, rng);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.next_double();
  auto post = nn::encoder_forward(params, x);
  for (int i = 0; i < 3; ++i) {
    CHECK(post.chol(i, i) > 0.0);
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(post.chol(i, j) == 0.0);
    }
  }
}

TEST_CASE("encoder sigma always admits a Cholesky factor") {
  NetConfig cfg{16, {12}, 4, PosteriorMode::kFullCholesky};
  RngStream rng(3);
  auto params = nn::init_params(cfg, rng);
  for (int rep = 0; rep < 10000; ++rep) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.next_double();
    auto post = nn::encoder_forward(params, x);
    CHECK_NOTHROW(cholesky(post.sigma));
  }
}

TEST_CASE("sigma keeps the 1e-4 jitter floor") {
  NetConfig cfg{8, {6}, 3, PosteriorMode::kFullCholesky};
  RngStream rng(4);
  auto params = nn::init_params(cfg, rng);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(8);
    for (auto& v : x) v = rng.next_double();
    auto post = nn::encoder_forward(params, x);
    // sigma - 0.99e-4 I must still be positive definite
    SpdMatrix shifted = post.sigma;
    for (int i = 0; i < 3; ++i) shifted(i, i) -= 0.99e-4;
    CHECK_NOTHROW(cholesky(shifted));
  }
}

TEST_CASE("zero-weight decoder outputs 0.5 everywhere") {
  NetConfig cfg{6, {5}, 3, PosteriorMode::kFullCholesky};
  auto params = zeroed_params(cfg);
  auto x_hat = nn::decoder_forward(params, {0.5, -1.0, 2.0});
  for (double v : x_hat) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("decoder outputs stay strictly inside (0,1)") {
  NetConfig cfg{10, {8}, 3, PosteriorMode::kFullCholesky};
  RngStream rng(5);
  auto params = nn::init_params(cfg, rng);
  for (int rep = 0; rep < 10000; ++rep) {
    std::vector<double> z(3);
    for (auto& v : z) v = 3.0 * rng.next_gaussian();
    for (double v : nn::decoder_forward(params, z)) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("pre-sigmoid response is locally linear in z") {
  NetConfig cfg{6, {8}, 3, PosteriorMode::kFullCholesky};
  RngStream rng(6);
  auto params = nn::init_params(cfg, rng);
  std::vector<double> z = {0.4, -0.2, 0.9};
  std::vector<double> dir = {1.0, 0.5, -0.3};
  const double h = 1e-6;
  auto probe = [&](double t) {
    std::vector<double> zt = z;
    for (int i = 0; i < 3; ++i) zt[i] += t * dir[i];
    return nn::decoder_forward(params, zt);
  };
  auto f0 = probe(0.0), f1 = probe(h), f2 = probe(2 * h);
  for (std::size_t j = 0; j < f0.size(); ++j) {
    double d1 = logit(f1[j]) - logit(f0[j]);
    double d2 = logit(f2[j]) - logit(f0[j]);
    CHECK(std::abs(d2 - 2.0 * d1) < 1e-9 + 1e-4 * std::abs(d1));
  }
}

TEST_CASE("init_params: zero biases, centered weights, deterministic") {
  NetConfig cfg{64, {32, 16}, 5, PosteriorMode::kFullCholesky};
  RngStream rng(7);
  auto params = nn::init_params(cfg, rng);
  double sum = 0.0;
  int count = 0;
  double limit0 = std::sqrt(6.0 / (64 + 32));
  for (int i = 0; i < params.count(); ++i) {
    if (params.names[i].find("_b") != std::string::npos) {
      for (double v : params.tensors[i].v) CHECK(v == 0.0);
    } else {
      for (double v : params.tensors[i].v) {
        sum += v;
        ++count;
      }
    }
  }
  // mean within 3 SE of 0 (uniform(-l, l) has sd l/sqrt(3); l varies per layer,
  // bounded by the largest limit)
  CHECK(std::abs(sum / count) < 3.0 * limit0 / std::sqrt(3.0 * count));

  RngStream rng2(7);
  auto params2 = nn::init_params(cfg, rng2);
  for (int i = 0; i < params.count(); ++i) CHECK(params.tensors[i].v == params2.tensors[i].v);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged and decays moments") {
  NetConfig cfg{4, {3}, 2, PosteriorMode::kFullCholesky};
  RngStream rng(8);
  auto params = nn::init_params(cfg, rng);
  auto state = nn::init_adam_state(params);
  nn::OptimizerConfig opt;

  std::vector<ad::Tensor> g1;
  for (const auto& t : params.tensors) {
    ad::Tensor g = ad::Tensor::zeros(t.shape);
    for (auto& v : g.v) v = 0.25;
    g1.push_back(g);
  }
  nn::adam_step(params, g1, state, opt);
  double m_before = state.m[0].v[0];

  auto snapshot = params.tensors;
  std::vector<ad::Tensor> zeros;
  for (const auto& t : params.tensors) zeros.push_back(ad::Tensor::zeros(t.shape));
  nn::adam_step(params, zeros, state, opt);
  CHECK(state.m[0].v[0] == doctest::Approx(opt.beta1 * m_before));
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    for (int k = 0; k < snapshot[i].size(); ++k) {
      // the decayed moment still nudges weights; with zero grad the nudge is
      // bounded by lr
      CHECK(std::abs(params.tensors[i].v[k] - snapshot[i].v[k]) <= opt.lr * 1.0001);
    }
  }
}

TEST_CASE("adam first step moves by about -lr * sign(g)") {
  NetConfig cfg{4, {3}, 2, PosteriorMode::kFullCholesky};
  RngStream rng(9);
  auto params = nn::init_params(cfg, rng);
  auto before = params.tensors;
  auto state = nn::init_adam_state(params);
  nn::OptimizerConfig opt;

  std::vector<ad::Tensor> grads;
  RngStream grng(10);
  for (const auto& t : params.tensors) {
    ad::Tensor g = ad::Tensor::zeros(t.shape);
    for (auto& v : g.v) v = grng.next_gaussian();
    grads.push_back(g);
  }
  nn::adam_step(params, grads, state, opt);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (int k = 0; k < grads[i].size(); ++k) {
      double g = grads[i].v[k];
      if (std::abs(g) < 1e-3) continue;  // sign approximation degrades near 0
      double update = params.tensors[i].v[k] - before[i].v[k];
      CHECK(update == doctest::Approx(-opt.lr * (g > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
  }
}

TEST_CASE("adam is a pure function of its inputs") {
  NetConfig cfg{4, {3}, 2, PosteriorMode::kFullCholesky};
  RngStream rng(11);
  auto params_a = nn::init_params(cfg, rng);
  auto params_b = params_a;
  auto state_a = nn::init_adam_state(params_a);
  auto state_b = nn::init_adam_state(params_b);
  nn::OptimizerConfig opt;
  std::vector<ad::Tensor> grads;
  RngStream grng(12);
  for (const auto& t : params_a.tensors) {
    ad::Tensor g = ad::Tensor::zeros(t.shape);
    for (auto& v : g.v) v = grng.next_gaussian();
    grads.push_back(g);
  }
  nn::adam_step(params_a, grads, state_a, opt);
  nn::adam_step(params_b, grads, state_b, opt);
  for (int i = 0; i < params_a.count(); ++i) {
    CHECK(params_a.tensors[i].v == params_b.tensors[i].v);
    CHECK(state_a.m[i].v == state_b.m[i].v);
    CHECK(state_a.v[i].v == state_b.v[i].v);
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  NetConfig cfg{4, {3}, 2, PosteriorMode::kFullCholesky};
  RngStream rng(13);
  auto params = nn::init_params(cfg, rng);
  auto state = nn::init_adam_state(params);
  std::vector<ad::Tensor> grads;
  for (const auto& t : params.tensors) grads.push_back(ad::Tensor::zeros(t.shape));
  grads[2].v[0] = std::nan("");
  CHECK_THROWS_AS(nn::adam_step(params, grads, state, nn::OptimizerConfig{}), NonFiniteGradient);
}

TEST_CASE("adam minimizes a quadratic bowl") {
  // f(w) = |w|^2, gradient 2w
  nn::NetConfig cfg{1, {3}, 1, PosteriorMode::kFullCholesky};
  RngStream rng(14);
  auto params = nn::init_params(cfg, rng);
  // repurpose one tensor as the bowl variable
  params.tensors[0] = ad::Tensor::vector({1.0, -2.0, 0.5});
  params.tensors[0].shape = {3};
  auto state = nn::init_adam_state(params);
  nn::OptimizerConfig opt;
  opt.lr = 0.01;
  for (int step = 0; step < 5000; ++step) {
    std::vector<ad::Tensor> grads;
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
      ad::Tensor g = ad::Tensor::zeros(params.tensors[i].shape);
      if (i == 0) {
        for (int k = 0; k < 3; ++k) g.v[k] = 2.0 * params.tensors[0].v[k];
      }
      grads.push_back(g);
    }
    nn::adam_step(params, grads, state, opt);
  }
  double f = 0.0;
  for (double w : params.tensors[0].v) f += w * w;
  CHECK(f < 1e-3);
}

TEST_CASE("encoder-decoder round trip is differentiable end to end") {
  NetConfig cfg{6, {5}, 2, PosteriorMode::kFullCholesky};
  RngStream rng(15);
  auto params = nn::init_params(cfg, rng);
  std::vector<double> x(6), eps(2);
  for (auto& v : x) v = rng.next_double();
  for (auto& v : eps) v = rng.next_gaussian();

  auto value = [&](const nn::ModelParams& pr) {
    ad::Tape tape;
    auto pv = nn::register_params(tape, pr, false);
    auto enc = nn::encoder_graph(tape, pv, pr, tape.constant(ad::Tensor::vector(x)));
    ad::Var z = tape.add(enc.mu, tape.matvec(enc.chol, tape.constant(ad::Tensor::vector(eps))));
    return tape.sum(nn::decoder_graph(tape, pv, pr, z)).value().item();
  };

  ad::Tape tape;
  auto pv = nn::register_params(tape, params, true);
  auto enc = nn::encoder_graph(tape, pv, params, tape.constant(ad::Tensor::vector(x)));
  ad::Var z = tape.add(enc.mu, tape.matvec(enc.chol, tape.constant(ad::Tensor::vector(eps))));
  tape.backward(tape.sum(nn::decoder_graph(tape, pv, params, z)));

  const double h = 1e-5;
  for (int t = 0; t < params.count(); ++t) {
    for (int k = 0; k < params.tensors[t].size(); ++k) {
      double keep = params.tensors[t].v[k];
      params.tensors[t].v[k] = keep + h;
      double fp = value(params);
      params.tensors[t].v[k] = keep - h;
      double fm = value(params);
      params.tensors[t].v[k] = keep;
      double fd = (fp - fm) / (2 * h);
      CHECK(std::abs(pv.vars[t].grad().v[k] - fd) <= std::max(1e-6, 1e-4 * std::abs(fd)));
    }
  }
}

TEST_CASE("batched and single-example forwards agree") {
  NetConfig cfg{10, {7}, 3, PosteriorMode::kFullCholesky};
  RngStream rng(16);
  auto params = nn::init_params(cfg, rng);
  const int batch = 4;
  std::vector<double> x_flat(batch * 10);
  for (auto& v : x_flat) v = rng.next_double();

  ad::Tape tape;
  auto pv = nn::register_params(tape, params, false);
  auto enc = nn::encoder_graph_batch(tape, pv, params, tape.constant(ad::Tensor::matrix(batch, 10, x_flat)), batch);
  for (int i = 0; i < batch; ++i) {
    std::vector<double> xi(x_flat.begin() + i * 10, x_flat.begin() + (i + 1) * 10);
    auto post = nn::encoder_forward(params, xi);
    for (int d = 0; d < 3; ++d) {
      CHECK(enc.mu.value().v[i * 3 + d] == doctest::Approx(post.mu[d]).epsilon(1e-12));
    }
    CHECK(nn::encode_mean(params, xi) == post.mu);
  }
}

}  // TEST_SUITE
