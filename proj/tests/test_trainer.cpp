#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "actint/inversion.hpp"
#include "actint/trainer.hpp"
#include "support/oracles.hpp"

using namespace actint;

namespace {

std::vector<Sample> square_data() {
  std::vector<Sample> data;
  for (double x : oracle::grid(-1.0, 1.0, 41)) data.push_back({x, x * x});
  return data;
}

// Loss computed with its own forward pass, independent of the trainer.
double reference_loss(const std::vector<double>& theta, std::size_t width, Activation kind,
                      const std::vector<Sample>& data) {
  double total = 0.0;
  for (const auto& s : data) {
    double y = theta[3 * width];
    for (std::size_t i = 0; i < width; ++i) {
      const double z = theta[2 * i] * s.x + theta[2 * i + 1];
      const double a = kind == Activation::Sigmoid ? oracle::sigmoid(z) : std::tanh(z);
      y += theta[2 * width + i] * a;
    }
    total += (y - s.y) * (y - s.y);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

TEST(Xorshift, FixedStream) {
  Xorshift64Star a(1), b(1), c(2);
  const auto first = a.next();
  EXPECT_EQ(first, b.next());
  EXPECT_NE(first, c.next());
  for (int k = 0; k < 1000; ++k) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Train, HistoryLengthAndDescent) {
  std::vector<Sample> data;
  for (double x : oracle::grid(-1.0, 1.0, 11)) data.push_back({x, 0.7});
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.hidden_width = 3;
  const auto res = train(cfg, data);
  ASSERT_EQ(res.loss_history.size(), 301u);
  EXPECT_LT(res.loss_history.back(), res.loss_history.front());
  for (double l : res.loss_history) EXPECT_TRUE(std::isfinite(l));
  EXPECT_EQ(res.loss_history.back(), mse_loss(res.network, data));
}

TEST(Train, DeterministicReplay) {
  TrainConfig cfg;
  cfg.epochs = 500;
  const auto a = train(cfg, square_data());
  const auto b = train(cfg, square_data());
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(mlp_parameters(a.network), mlp_parameters(b.network));
}

TEST(Train, TwoSeedsOneFunction) {
  TrainConfig cfg;
  cfg.hidden_width = 8;
  cfg.activation = Activation::Sigmoid;
  cfg.learning_rate = 0.3;
  cfg.epochs = 20000;
  const auto data = square_data();
  cfg.seed = 1;
  const auto a = train(cfg, data);
  cfg.seed = 2;
  const auto b = train(cfg, data);
  EXPECT_NE(mlp_parameters(a.network), mlp_parameters(b.network));
  const auto fa = reconstruct_function(a.network, -1.0, 1.0);
  const auto fb = reconstruct_function(b.network, -1.0, 1.0);
  EXPECT_LE(oracle::max_gap(fa, fb, -1.0, 1.0, 10001), 0.1);
}

TEST(Train, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto kind : {Activation::Sigmoid, Activation::Tanh}) {
    for (int t = 0; t < 5; ++t) {
      const std::size_t width = 2 + static_cast<std::size_t>(t);
      std::vector<double> theta(mlp_parameter_count(width));
      for (double& v : theta) v = u(rng);
      std::vector<Sample> data;
      for (int k = 0; k < 15; ++k) data.push_back({u(rng), u(rng)});
      const auto net = mlp_from_parameters(theta, width, kind);
      EXPECT_NEAR(mse_loss(net, data), reference_loss(theta, width, kind, data), 1e-14);
      const auto grad = mse_gradient(net, data);
      for (std::size_t k = 0; k < theta.size(); ++k) {
        auto plus = theta, minus = theta;
        plus[k] += 1e-6;
        minus[k] -= 1e-6;
        const double fd = (reference_loss(plus, width, kind, data) - reference_loss(minus, width, kind, data)) / 2e-6;
        EXPECT_LE(std::fabs(grad[k] - fd), 1e-4 * std::max({std::fabs(grad[k]), std::fabs(fd), 1e-3}))
            << to_string(kind) << " parameter " << k;
      }
    }
  }
}

TEST(Train, DivergenceReportsEpoch) {
  TrainConfig cfg;
  cfg.learning_rate = 1e6;
  cfg.epochs = 1000;
  cfg.activation = Activation::Relu;
  std::vector<Sample> data{{1.0, 100.0}, {-1.0, -100.0}, {0.5, 3.0}};
  try {
    train(cfg, data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TrainingDiverged);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, Rejections) {
  TrainConfig cfg;
  EXPECT_THROW(train(cfg, std::vector<Sample>{}), Error);
  EXPECT_THROW(train(cfg, std::vector<Sample>{{0.0, std::nan("")}}), Error);
  cfg.epochs = 0;
  EXPECT_THROW(train(cfg, square_data()), Error);
}

TEST(Train, HardKindStallsOutsideBands) {
  // Every sample lies outside both bands.
  TrainConfig cfg;
  cfg.activation = Activation::HardLinear;
  cfg.hidden_width = 2;
  cfg.epochs = 10;
  std::vector<Sample> data{{50.0, 1.0}, {60.0, 2.0}};
  const auto res = train(cfg, data);
  const auto theta = mlp_parameters(res.network);
  Xorshift64Star rng(cfg.seed);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(theta[k], 2.0 * rng.uniform() - 1.0);
}
