#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "actint/actint.hpp"
#include "support/oracles.hpp"

using namespace actint;

namespace {

std::uint64_t bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

std::vector<NetworkSpec> assorted_networks() {
  std::vector<NetworkSpec> nets;
  nets.push_back(compile_scalar(uniform_partition(0.0, 3.0, 7, [](double x) { return std::sin(x) / 3.0; }),
                                Activation::HardLinear));
  nets.push_back(compile_scalar(uniform_partition(-1.0, 1.0, 5, [](double x) { return std::exp(x); }), Activation::Relu));
  nets.push_back(compile_scalar(uniform_partition(-1.0, 1.0, 5, [](double x) { return x * x * x; }), Activation::Tanh));
  nets.push_back(NetworkSpec(4, {SharedWeight{{0.1, 0.2}, 2, Activation::Sigmoid}, LinearOnly{Matrix(1, 2, {1.0 / 3.0, -0.7}), false}}));
  NetworkSpec inner(1, {DenseActivated{Matrix(2, 2, {1.0, 0.1, -1.0, 0.3}), Activation::Relu},
                        LinearOnly{Matrix(1, 2, {0.5, 0.25}), false}});
  nets.push_back(NetworkSpec(1, {1}, {make_residual(inner)}, {Route::from_block(0)}));
  nets.push_back(NetworkSpec(2, {1, 1},
                             {RecurrentStep{0.9, Matrix(2, 2, {1.0, 0.0, -0.5, 0.2}), Activation::Tanh},
                              RecurrentStep{1.1, Matrix(2, 2, {0.3, 0.1, 0.7, -0.2}), std::nullopt},
                              Combine{CombineMode::Product}},
                             {Route::from_block(0), Route::from_block(1), Route::previous()}));
  return nets;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("actint_io_" + name)).string();
}

}  // namespace

TEST(FormatReal, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 10000; ++k) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(bits(parse_real(format_real(v))), bits(v));
  }
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(bits(parse_real(format_real(-0.0))), bits(-0.0));
  EXPECT_EQ(bits(parse_real(format_real(std::numeric_limits<double>::denorm_min()))),
            bits(std::numeric_limits<double>::denorm_min()));
}

TEST(ParseReal, Rejections) {
  for (const char* bad : {"", "abc", "1.0x", "inf", "nan", "1e999"}) EXPECT_THROW(parse_real(bad), Error) << bad;
}

TEST(NetworkDocument, RoundTripIsBitExact) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& net : assorted_networks()) {
    const auto text = serialize_network(net);
    const auto back = parse_network(text);
    EXPECT_EQ(back, net);
    EXPECT_EQ(serialize_network(back), text);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> x(net.input_arity());
      for (double& v : x) v = u(rng);
      const auto a = forward(net, x);
      const auto b = forward(back, x);
      for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(bits(a[j]), bits(b[j]));
    }
  }
}

TEST(NetworkDocument, FileRoundTrip) {
  const auto net = assorted_networks().front();
  const auto path = temp_path("net.json");
  save_network(path, net);
  EXPECT_EQ(load_network(path), net);
  std::filesystem::remove(path);
}

TEST(NetworkDocument, RejectsUnknownFieldsAndVersions) {
  const auto good = detail::to_json(assorted_networks().front());
  auto extra = good;
  extra["comment"] = "hi";
  EXPECT_THROW(detail::network_from_json(extra), Error);
  auto layer_extra = good;
  layer_extra["layers"][0]["note"] = 1;
  EXPECT_THROW(detail::network_from_json(layer_extra), Error);
  auto ver = good;
  ver["format_version"] = 2;
  EXPECT_THROW(detail::network_from_json(ver), Error);
  auto missing = good;
  missing.erase("format_version");
  EXPECT_THROW(detail::network_from_json(missing), Error);
  auto numeric = good;
  numeric["layers"][0]["weights"][0] = 1.5;
  EXPECT_THROW(detail::network_from_json(numeric), Error);
  auto kind = good;
  kind["layers"][0]["kind"] = "attention";
  EXPECT_THROW(detail::network_from_json(kind), Error);
  try {
    parse_network("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}

TEST(NetworkDocument, ShapeErrorsSurface) {
  auto doc = detail::to_json(assorted_networks().front());
  doc["layers"][0]["rows"] = 99;
  EXPECT_THROW(detail::network_from_json(doc), Error);
}

TEST(Csv, PartitionRoundTrip) {
  const auto p = uniform_partition(0.0, 1.0, 6, [](double x) { return std::cos(x); });
  const auto path = temp_path("p.csv");
  {
    std::ofstream out(path);
    write_partition_csv(out, p);
  }
  EXPECT_EQ(read_partition_csv(path), Partition(std::vector<double>(p.knots().begin(), p.knots().end()),
                                                std::vector<double>(p.values().begin(), p.values().end())));
  std::filesystem::remove(path);
}

TEST(Csv, SamplesAndGrid) {
  const auto sp = temp_path("s.csv");
  write_text_file(sp, "x,y\n0,1\n0.5, 2\n\n1,3\n");
  const auto s = read_samples_csv(sp);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].y, 2.0);
  const auto gp = temp_path("g.csv");
  write_text_file(gp, "i1,i2,f\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n");
  const auto g = read_grid_csv(gp);
  EXPECT_EQ(g.at({1, 0}), 2.0);
  write_text_file(gp, "i1,i2,f\n0.5,0,1\n");
  EXPECT_THROW(read_grid_csv(gp), Error);
  write_text_file(sp, "a,b\n0,1\n");
  EXPECT_THROW(read_samples_csv(sp), Error);
  write_text_file(sp, "x,y\n0\n");
  EXPECT_THROW(read_samples_csv(sp), Error);
  std::filesystem::remove(sp);
  std::filesystem::remove(gp);
}
