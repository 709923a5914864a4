#include <gtest/gtest.h>

#include "ocpad/nn/network.hpp"
#include "ocpad/nn/rmsprop.hpp"
#include "support/gradcheck.hpp"

using namespace ocpad;
using namespace ocpad::nn;

TEST(InferShapes, NamesTheFailingLayer) {
  try {
    infer_shapes({LayerSpec::conv(4), LayerSpec::dense(3)}, {1, 4, 4});
    FAIL() << "expected a contract error";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(InferShapes, RejectsInvalidConvSpecs) {
  EXPECT_THROW(infer_shapes({LayerSpec::conv(2, 2, 1)}, {1, 4, 4}), ContractError);  // even kernel
  EXPECT_THROW(infer_shapes({LayerSpec::conv(2, 3, 3)}, {1, 4, 4}), ContractError);  // stride 3
  EXPECT_THROW(infer_shapes({LayerSpec::conv(0, 3, 1)}, {1, 4, 4}), ContractError);
  EXPECT_THROW(infer_shapes({LayerSpec::reshape({5})}, {1, 2, 2}), ContractError);
  EXPECT_THROW(infer_shapes({LayerSpec::crop(5, 1)}, {1, 4, 4}), ContractError);
}

TEST(InferShapes, MatchesForwardOnRandomChains) {
  // Random valid chains over image tensors; every inferred shape must equal
  // the shape actually produced by the forward pass.
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    Shape cur{1 + rng.below(3), 1 + rng.below(9), 1 + rng.below(9)};
    const Shape input = cur;
    std::vector<LayerSpec> layers;
    const std::size_t depth = 1 + rng.below(6);
    for (std::size_t k = 0; k < depth; ++k) {
      switch (rng.below(6)) {
        case 0: layers.push_back(LayerSpec::conv(1 + rng.below(3), 2 * rng.below(3) + 1, 1 + rng.below(2))); break;
        case 1: layers.push_back(LayerSpec::maxpool(2)); break;
        case 2: layers.push_back(LayerSpec::upsample(2)); break;
        case 3: layers.push_back(LayerSpec::relu()); break;
        case 4: layers.push_back(LayerSpec::sigmoid()); break;
        default: layers.push_back(LayerSpec::crop(1 + rng.below(2), 1)); break;
      }
      try {
        cur = infer_shapes(layers, input).back();
      } catch (const ContractError&) {
        layers.pop_back();
      }
    }
    if (layers.empty()) continue;
    Network<float> net(layers, input);
    const auto p = init_params<float>(layers, input, trial);
    Tensor<float> x(with_batch(2, input), 0.5f);
    const auto t = net.forward(p, x);
    for (std::size_t i = 0; i < layers.size(); ++i)
      EXPECT_EQ(t.activations[i + 1].shape(), with_batch(2, net.layer_shape(i))) << "trial " << trial << " layer " << i;
  }
}

TEST(InitParams, IsDeterministicAndGlorotBounded) {
  const std::vector<LayerSpec> layers{LayerSpec::conv(6, 3, 1), LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(5)};
  const Shape in{2, 4, 4};
  const auto a = init_params<float>(layers, in, 17);
  const auto b = init_params<float>(layers, in, 17);
  const auto c = init_params<float>(layers, in, 18);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  const double conv_limit = std::sqrt(6.0 / (2 * 9 + 6 * 9));
  const double dense_limit = std::sqrt(6.0 / (96 + 5));
  for (float v : a.weights[0].storage()) EXPECT_LE(std::abs(v), conv_limit);
  for (float v : a.weights[3].storage()) EXPECT_LE(std::abs(v), dense_limit);
  for (float v : a.biases[0].storage()) EXPECT_EQ(v, 0.0f);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    EXPECT_EQ(a.weight_acc[i].shape(), a.weights[i].shape());
    EXPECT_EQ(a.bias_acc[i].shape(), a.biases[i].shape());
  }
  EXPECT_EQ(a.parameter_count(), 6u * 2 * 9 + 6 + 96u * 5 + 5);
}

TEST(Network, RejectsWrongInputShape) {
  Network<float> net({LayerSpec::conv(2)}, {1, 4, 4});
  const auto p = init_params<float>(net.layers(), net.input_shape(), 1);
  EXPECT_THROW(net.forward(p, Tensor<float>({1, 2, 4, 4})), ContractError);
  EXPECT_THROW(net.forward(p, Tensor<float>({2, 4, 4})), ContractError);
}

TEST(Network, ForwardAndBackwardAreDeterministic) {
  const std::vector<LayerSpec> layers{LayerSpec::conv(3), LayerSpec::relu(), LayerSpec::maxpool(), LayerSpec::upsample(),
                                      LayerSpec::conv(2), LayerSpec::sigmoid()};
  Network<float> net(layers, {2, 6, 6});
  const auto p = init_params<float>(layers, {2, 6, 6}, 3);
  SplitMix64 rng(1);
  Tensor<float> x({3, 2, 6, 6});
  for (float& v : x.storage()) v = static_cast<float>(rng.uniform());
  const auto t1 = net.forward(p, x), t2 = net.forward(p, x);
  EXPECT_EQ(t1.output(), t2.output());
  const auto g1 = net.backward(p, t1, t1.output()), g2 = net.backward(p, t2, t2.output());
  for (std::size_t i = 0; i < layers.size(); ++i) EXPECT_EQ(g1.weights[i], g2.weights[i]);
  EXPECT_EQ(g1.input, g2.input);
  for (float v : t1.output().storage()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(Network, SkippingTheInputGradientLeavesParameterGradients) {
  const std::vector<LayerSpec> layers{LayerSpec::conv(3), LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(2)};
  Network<float> net(layers, {1, 4, 4});
  auto p = init_params<float>(layers, {1, 4, 4}, 5);
  Tensor<float> x({2, 1, 4, 4}, 0.3f);
  const auto t = net.forward(p, x);
  const auto full = net.backward(p, t, t.output());
  const auto partial = net.backward(p, t, t.output(), false);
  EXPECT_TRUE(partial.input.empty());
  for (std::size_t i = 0; i < layers.size(); ++i) EXPECT_EQ(full.weights[i], partial.weights[i]);
}

TEST(Network, FullChainGradientCheck) {
  const std::vector<LayerSpec> layers{LayerSpec::conv(2, 3, 1), LayerSpec::relu(),  LayerSpec::maxpool(),
                                      LayerSpec::flatten(),      LayerSpec::dense(3), LayerSpec::relu(),
                                      LayerSpec::dense(8),       LayerSpec::reshape({2, 2, 2}), LayerSpec::upsample(),
                                      LayerSpec::crop(3, 4),     LayerSpec::conv(1, 3, 1), LayerSpec::sigmoid()};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = gradcheck::check_network(layers, {2, 1, 3, 4}, seed);
    EXPECT_TRUE(r.ok()) << "seed " << seed << " worst " << r.worst << " checked " << r.checked;
  }
}

TEST(RmsPropStep, TouchesOnlyParametricLayers) {
  const std::vector<LayerSpec> layers{LayerSpec::flatten(), LayerSpec::dense(2)};
  Network<float> net(layers, {1, 2, 2});
  auto p = init_params<float>(layers, {1, 2, 2}, 1);
  const auto before = p;
  const auto t = net.forward(p, Tensor<float>({1, 1, 2, 2}, 1.0f));
  rmsprop_step(p, net.backward(p, t, Tensor<float>({1, 2}, 1.0f)), {});
  EXPECT_NE(p.weights[1], before.weights[1]);
  EXPECT_TRUE(p.weights[0].empty());
}
