#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace lipcert {

/// Scalar nonlinearities. All of them are slope-restricted on [0, 1].
enum class Activation { kRelu, kTanh, kSigmoid, kLinear };

enum class PoolKind { kAverage, kMaximum };

std::string_view activation_name(Activation a);
std::optional<Activation> parse_activation(std::string_view name);
double activate(Activation a, double x);

/// Causal 1D convolution. kernel[j] is the c_out x c_in tap that multiplies
/// the input delayed by j steps.
struct ConvLayerSpec {
  std::vector<Eigen::MatrixXd> kernel;
  Eigen::VectorXd bias;
  Activation activation = Activation::kRelu;

  int taps() const { return static_cast<int>(kernel.size()); }
  int in_channels() const { return kernel.empty() ? 0 : static_cast<int>(kernel.front().cols()); }
  int out_channels() const { return kernel.empty() ? 0 : static_cast<int>(kernel.front().rows()); }
};

/// Channel-wise pooling with stride equal to the window.
struct PoolLayerSpec {
  PoolKind kind = PoolKind::kAverage;
  int window = 1;
};

struct FlattenMarker {};

struct DenseLayerSpec {
  Eigen::MatrixXd weight;  // n_out x n_in
  Eigen::VectorXd bias;
  Activation activation = Activation::kLinear;
};

using LayerSpec = std::variant<ConvLayerSpec, PoolLayerSpec, FlattenMarker, DenseLayerSpec>;

struct NetworkSpec {
  int input_channels = 1;
  std::vector<LayerSpec> layers;
};

/// A NetworkSpec whose layer grammar and channel chain have been checked.
/// Immutable; obtain one through validate_network().
class ValidatedNetwork {
 public:
  const NetworkSpec& spec() const { return spec_; }
  const LayerSpec& layer(int i) const { return spec_.layers[static_cast<std::size_t>(i)]; }
  int num_layers() const { return static_cast<int>(spec_.layers.size()); }

  const std::vector<int>& conv_layers() const { return conv_layers_; }
  const std::vector<int>& pool_layers() const { return pool_layers_; }
  const std::vector<int>& dense_layers() const { return dense_layers_; }
  std::optional<int> flatten_index() const { return flatten_index_; }

  /// Last convolutional or dense layer; its activation is linear.
  int terminal_layer() const { return terminal_layer_; }

  bool has_conv_part() const { return !conv_layers_.empty(); }
  bool has_dense_part() const { return !dense_layers_.empty(); }
  bool has_max_pool() const;

  /// Channel count entering layer i (or leaving the conv part when i == num_layers()).
  int channels_before(int i) const { return channels_before_[static_cast<std::size_t>(i)]; }

  /// Channel count c_p at the end of the conv part (input_channels for an MLP).
  int boundary_channels() const;

  /// Input length N_0 fixed by the first dense layer's width, if there is a dense part.
  std::optional<int> implied_input_length() const;

  /// Product of all pooling windows in the conv part.
  int total_pool_factor() const;

 private:
  friend ValidatedNetwork validate_network(NetworkSpec spec);

  NetworkSpec spec_;
  std::vector<int> conv_layers_;
  std::vector<int> pool_layers_;
  std::vector<int> dense_layers_;
  std::optional<int> flatten_index_;
  int terminal_layer_ = -1;
  std::vector<int> channels_before_;
};

/// Throws Error{GrammarViolation | DimensionMismatch | InvalidValue | FlattenMismatch}.
ValidatedNetwork validate_network(NetworkSpec spec);

struct SignalShape {
  int channels = 0;
  int length = 0;  // 1 for dense-part signals
  int size() const { return channels * length; }
};

struct DimTrace {
  SignalShape input;
  std::vector<SignalShape> layers;  // shape after each layer
  int flatten_size = 0;             // n_p = c_p * N_p, or 0 without a conv part
};

/// Throws Error{IndivisiblePooling | FlattenMismatch}.
DimTrace infer_dims(const ValidatedNetwork& net, int n0);

/// Flattening stacks channels fastest, time steps in order; this is the
/// column-major storage of a channels x length matrix.
Eigen::VectorXd flatten_signal(const Eigen::MatrixXd& signal);
Eigen::MatrixXd unflatten_signal(const Eigen::VectorXd& flat, int channels);

/// Evaluates the network on a c_0 x N_0 input and returns the flattened output.
Eigen::VectorXd forward(const ValidatedNetwork& net, const Eigen::MatrixXd& input);

/// Signals w^0..w^l. Conv-part signals are channels x length; after flatten
/// every signal is a column vector.
std::vector<Eigen::MatrixXd> forward_trace(const ValidatedNetwork& net, const Eigen::MatrixXd& input);

/// Causal convolution with front zero padding, before bias and activation.
Eigen::MatrixXd convolve(const ConvLayerSpec& conv, const Eigen::MatrixXd& input);
Eigen::MatrixXd pool(const PoolLayerSpec& pool, const Eigen::MatrixXd& input);

/// Architecture template for random_network().
struct ArchDescriptor {
  std::vector<int> channels;  // c_0, c_1, ..., c_k (c_0 alone for an MLP)
  std::vector<int> kernels;   // l_1, ..., l_k
  std::vector<std::optional<PoolLayerSpec>> pools;  // per conv layer; may be shorter
  std::vector<int> dense_widths;
  int input_length = 0;  // needed to size the first dense layer
  Activation hidden_activation = Activation::kRelu;
};

/// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases,
/// linear terminal layer. Deterministic in seed.
NetworkSpec random_network(const ArchDescriptor& arch, std::uint64_t seed);

/// Three conv layers, channels [1,3,5,10], kernels [3,3,3], no pooling.
ArchDescriptor fully_convolutional_arch();

/// conv(3) -> avgpool(2) -> conv(3) -> avgpool(2) -> flatten -> dense(classes).
ArchDescriptor two_stage_pooling_arch(int c1, int c2, int input_length = 128, int classes = 5);

}  // namespace lipcert
