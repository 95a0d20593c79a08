#include <gtest/gtest.h>

#include "lipcert/error.hpp"
#include "lipcert/model.hpp"
#include "lipcert/model_io.hpp"
#include "support.hpp"

using namespace lipcert;
using namespace lipcert::testing;
using Eigen::MatrixXd;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kParseError;
}

}  // namespace

TEST(Model, ConvolveIsCausalWithFrontPadding) {
  MatrixXd k0(1, 1), k1(1, 1);
  k0 << 1.0;
  k1 << 2.0;
  const auto conv = conv_layer({k0, k1}, Activation::kLinear);
  MatrixXd x(1, 4);
  x << 1, 2, 3, 4;
  MatrixXd expected(1, 4);
  expected << 1, 4, 7, 10;
  EXPECT_TRUE(convolve(conv, x).isApprox(expected));
}

TEST(Model, PoolingUsesStrideEqualToWindow) {
  MatrixXd x(2, 4);
  x << 1, 3, -1, 5,
       2, 2, 0, -4;
  MatrixXd avg(2, 2), mx(2, 2);
  avg << 2, 2, 2, -2;
  mx << 3, 5, 2, 0;
  EXPECT_TRUE(pool(PoolLayerSpec{PoolKind::kAverage, 2}, x).isApprox(avg));
  EXPECT_TRUE(pool(PoolLayerSpec{PoolKind::kMaximum, 2}, x).isApprox(mx));
}

TEST(Model, FlattenIsChannelFastest) {
  MatrixXd x(2, 3);
  x << 1, 2, 3,
       4, 5, 6;
  Eigen::VectorXd f(6);
  f << 1, 4, 2, 5, 3, 6;
  EXPECT_TRUE(flatten_signal(x).isApprox(f));
  EXPECT_TRUE(unflatten_signal(f, 2).isApprox(x));
}

TEST(Model, ForwardMatchesHandComputation) {
  NetworkSpec s;
  s.input_channels = 1;
  MatrixXd k0(2, 1), k1(2, 1);
  k0 << 1, -1;
  k1 << 1, 0;
  s.layers.emplace_back(conv_layer({k0, k1}, Activation::kRelu));
  s.layers.emplace_back(PoolLayerSpec{PoolKind::kAverage, 2});
  s.layers.emplace_back(FlattenMarker{});
  s.layers.emplace_back(dense_layer(MatrixXd::Ones(1, 2), Activation::kLinear));
  const auto net = validate_network(s);
  MatrixXd x(1, 2);
  x << 1, -2;
  // conv: ch0 = [1, -1], ch1 = [-1, 2]; relu: [1, 0], [0, 2]; avg: [0.5, 1]
  EXPECT_NEAR(forward(net, x)(0), 1.5, 1e-12);
}

TEST(Model, ValidationRejectsBadGrammar) {
  NetworkSpec empty;
  EXPECT_EQ(code_of([&] { validate_network(empty); }), ErrorCode::kGrammarViolation);

  NetworkSpec relu_last = single_dense(MatrixXd::Identity(2, 2));
  std::get<DenseLayerSpec>(relu_last.layers[0]).activation = Activation::kRelu;
  EXPECT_EQ(code_of([&] { validate_network(relu_last); }), ErrorCode::kGrammarViolation);

  NetworkSpec chain;
  chain.input_channels = 1;
  chain.layers.emplace_back(conv_layer({MatrixXd::Ones(2, 1)}, Activation::kRelu));
  chain.layers.emplace_back(conv_layer({MatrixXd::Ones(1, 3)}, Activation::kLinear));
  EXPECT_EQ(code_of([&] { validate_network(chain); }), ErrorCode::kDimensionMismatch);
}

TEST(Model, InferDimsChecksPoolingAndFlatten) {
  const auto net = validate_network(identity_pool_net(PoolKind::kAverage, 2, 1, 4));
  EXPECT_EQ(net.implied_input_length(), 4);
  EXPECT_EQ(code_of([&] { infer_dims(net, 5); }), ErrorCode::kIndivisiblePooling);
  EXPECT_EQ(code_of([&] { infer_dims(net, 8); }), ErrorCode::kFlattenMismatch);
  EXPECT_EQ(infer_dims(net, 4).flatten_size, 2);
}

TEST(Model, RandomNetworkIsDeterministic) {
  const auto arch = fully_convolutional_arch();
  EXPECT_EQ(network_to_json(random_network(arch, 7)), network_to_json(random_network(arch, 7)));
  EXPECT_NE(network_to_json(random_network(arch, 7)), network_to_json(random_network(arch, 8)));
  const auto net = validate_network(random_network(arch, 7));
  EXPECT_EQ(net.conv_layers().size(), 3u);
  EXPECT_EQ(net.channels_before(net.num_layers()), 10);
}

TEST(ModelIo, JsonRoundTrip) {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const NetworkSpec spec = corpus_network(i).spec;
    const std::string text = network_to_json(spec);
    EXPECT_EQ(network_to_json(network_from_json(text)), text);
  }
}

TEST(ModelIo, MalformedJsonIsAParseError) {
  EXPECT_EQ(code_of([] { network_from_json("{"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { network_from_json(R"({"format":"other","layers":[]})"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { load_network("/nonexistent/model.json"); }), ErrorCode::kParseError);
}
