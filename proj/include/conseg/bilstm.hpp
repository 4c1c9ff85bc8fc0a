#pragma once

// Stacked bidirectional LSTM boundary detector.
//
// Each layer runs one LSTM forward in time and an independent one backward
// in time; the layer output at frame t is [h_fwd(t); h_bwd(t)]. The top layer
// feeds a 2-class output head y(t) = W_fwd h_fwd(t) + W_bwd h_bwd(t) + b.
// Class 1 is "boundary frame", class 0 is "other".
//
// Gate weights of one direction are stacked row-wise in the order
// input, forget, cell candidate, output, so W_x is (4H x in) and W_h is
// (4H x H). Sequences are column-major: an input of T frames is (in x T).

#include "conseg/features.hpp"
#include "conseg/segment.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace conseg {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatrixRef = Eigen::Ref<const Matrix<T>>;

enum GateBlock : int { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

inline constexpr int kNumClasses = 2;
inline constexpr int kBoundaryClass = 1;

template <typename T>
struct LstmDirectionParams {
  Matrix<T> input_weights;      // 4H x in
  Matrix<T> recurrent_weights;  // 4H x H
  Vector<T> bias;               // 4H
};

template <typename T>
struct LstmLayerParams {
  LstmDirectionParams<T> forward;
  LstmDirectionParams<T> backward;
};

template <typename T>
struct BasicBilstmParams {
  std::vector<LstmLayerParams<T>> layers;
  Matrix<T> output_forward;   // 2 x H
  Matrix<T> output_backward;  // 2 x H
  Vector<T> output_bias;      // 2

  int input_size() const;
  int hidden_size() const;
  int num_layers() const { return static_cast<int>(layers.size()); }
  std::size_t parameter_count() const;

  static BasicBilstmParams zeros(int input_size, int hidden_size, int num_layers);

  template <typename U>
  BasicBilstmParams<U> cast() const;
};

using BilstmParams = BasicBilstmParams<double>;

/// Non-owning view of one parameter tensor, column-major.
template <typename T>
struct TensorView {
  std::string name;
  T* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
};

/// All tensors in declared order: per layer, forward then backward direction,
/// each as input_weights, recurrent_weights, bias; then output_forward,
/// output_backward, output_bias.
template <typename T>
std::vector<TensorView<T>> tensor_views(BasicBilstmParams<T>& params);
template <typename T>
std::vector<TensorView<const T>> tensor_views(const BasicBilstmParams<T>& params);

/// Throws ValidationError on inconsistent shapes or non-finite values.
template <typename T>
void validate(const BasicBilstmParams<T>& params);

/// Uniform in [-s, s] with s = 1/sqrt(fan_in); gate biases zero except the
/// forget gate, which starts at 1.
template <typename T>
BasicBilstmParams<T> init_params(int input_size, int hidden_size, int num_layers,
                                 std::uint64_t seed);

template <typename T>
struct CellState {
  Vector<T> hidden;
  Vector<T> cell;
};

/// One LSTM step.
template <typename T>
CellState<T> lstm_cell_forward(const Vector<T>& x, const Vector<T>& h_prev, const Vector<T>& c_prev,
                               const LstmDirectionParams<T>& params);

/// Stacks feature vectors into a (120 x T) matrix.
Matrix<double> features_to_matrix(const std::vector<FeatureVector>& features);

/// Per-frame logits, (2 x T). Throws ValidationError on an empty sequence or
/// mismatched input size.
template <typename T>
Matrix<T> bilstm_forward(const MatrixRef<T>& inputs, const BasicBilstmParams<T>& params);

/// Softmax probability of the boundary class at each frame.
template <typename T>
std::vector<double> boundary_probabilities(const MatrixRef<T>& logits);

struct LossWeights {
  double positive = 40.0;
  double negative = 1.0;
};

/// Adds `scale` times the gradient of the weighted negative log-likelihood
/// sum over the sequence into `grads`, and returns that unnormalized sum.
template <typename T>
double accumulate_gradient(const MatrixRef<T>& inputs, std::span<const std::uint8_t> labels,
                           const BasicBilstmParams<T>& params, const LossWeights& weights, T scale,
                           BasicBilstmParams<T>& grads);

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  BasicBilstmParams<T> grads;
};

/// J = -(1/m) sum_t w(g_t) log p_t(g_t) and its exact gradient by
/// backpropagation through time.
template <typename T>
LossAndGrad<T> loss_and_grad(const MatrixRef<T>& inputs, std::span<const std::uint8_t> labels,
                             const BasicBilstmParams<T>& params, const LossWeights& weights);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  BasicBilstmParams<T> first_moment;
  BasicBilstmParams<T> second_moment;
  long step = 0;

  static AdamState for_params(const BasicBilstmParams<T>& params);
};

/// Bias-corrected Adam update, in place.
template <typename T>
void adam_step(BasicBilstmParams<T>& params, const BasicBilstmParams<T>& grads,
               AdamState<T>& state, const AdamConfig& config);

/// Turns per-frame boundary probabilities into gesture segments. Runs of
/// frames above `threshold` collapse to their argmax frame (earliest on
/// ties); those events pair up left to right as (start, end), a trailing
/// event pairs with the last frame, and pairs shorter than `min_length`
/// frames are dropped.
std::vector<Segment> predict_segments(std::span<const double> probabilities, double threshold,
                                      int min_length = 1);

}  // namespace conseg
