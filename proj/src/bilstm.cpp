#include "conseg/bilstm.hpp"

#include "conseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace conseg {

using Eigen::Index;

template <typename T>
int BasicBilstmParams<T>::input_size() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().forward.input_weights.cols());
}

template <typename T>
int BasicBilstmParams<T>::hidden_size() const {
  return static_cast<int>(output_forward.cols());
}

template <typename T>
std::size_t BasicBilstmParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& view : tensor_views(*this)) n += static_cast<std::size_t>(view.size());
  return n;
}

template <typename T>
BasicBilstmParams<T> BasicBilstmParams<T>::zeros(int input_size, int hidden_size, int num_layers) {
  if (input_size < 1 || hidden_size < 1 || num_layers < 1) {
    throw ValidationError("network dimensions must be positive");
  }
  const Index h = hidden_size;
  BasicBilstmParams<T> p;
  p.layers.resize(static_cast<std::size_t>(num_layers));
  for (int l = 0; l < num_layers; ++l) {
    const Index in = l == 0 ? input_size : 2 * h;
    for (auto* dir : {&p.layers[l].forward, &p.layers[l].backward}) {
      dir->input_weights = Matrix<T>::Zero(4 * h, in);
      dir->recurrent_weights = Matrix<T>::Zero(4 * h, h);
      dir->bias = Vector<T>::Zero(4 * h);
    }
  }
  p.output_forward = Matrix<T>::Zero(kNumClasses, h);
  p.output_backward = Matrix<T>::Zero(kNumClasses, h);
  p.output_bias = Vector<T>::Zero(kNumClasses);
  return p;
}

template <typename T>
template <typename U>
BasicBilstmParams<U> BasicBilstmParams<T>::cast() const {
  BasicBilstmParams<U> out;
  out.layers.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto convert = [](const LstmDirectionParams<T>& src, LstmDirectionParams<U>& dst) {
      dst.input_weights = src.input_weights.template cast<U>();
      dst.recurrent_weights = src.recurrent_weights.template cast<U>();
      dst.bias = src.bias.template cast<U>();
    };
    convert(layers[l].forward, out.layers[l].forward);
    convert(layers[l].backward, out.layers[l].backward);
  }
  out.output_forward = output_forward.template cast<U>();
  out.output_backward = output_backward.template cast<U>();
  out.output_bias = output_bias.template cast<U>();
  return out;
}

namespace {

template <typename P, typename V>
std::vector<V> collect_views(P& params) {
  std::vector<V> views;
  const auto add = [&views](std::string name, auto& tensor) {
    views.push_back(V{std::move(name), tensor.data(), tensor.rows(), tensor.cols()});
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    auto& layer = params.layers[l];
    for (auto [dir, name] : {std::pair{&layer.forward, "forward"}, std::pair{&layer.backward, "backward"}}) {
      add(prefix + name + ".input_weights", dir->input_weights);
      add(prefix + name + ".recurrent_weights", dir->recurrent_weights);
      add(prefix + name + ".bias", dir->bias);
    }
  }
  add("output_forward", params.output_forward);
  add("output_backward", params.output_backward);
  add("output_bias", params.output_bias);
  return views;
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x).exp()).inverse();
}

}  // namespace

template <typename T>
std::vector<TensorView<T>> tensor_views(BasicBilstmParams<T>& params) {
  return collect_views<BasicBilstmParams<T>, TensorView<T>>(params);
}

template <typename T>
std::vector<TensorView<const T>> tensor_views(const BasicBilstmParams<T>& params) {
  return collect_views<const BasicBilstmParams<T>, TensorView<const T>>(params);
}

template <typename T>
void validate(const BasicBilstmParams<T>& params) {
  if (params.layers.empty()) throw ValidationError("network has no layers");
  const Index h = params.output_forward.cols();
  const Index in0 = params.layers.front().forward.input_weights.cols();
  if (h < 1 || in0 < 1) throw ValidationError("network dimensions must be positive");
  const auto expected = BasicBilstmParams<T>::zeros(static_cast<int>(in0), static_cast<int>(h),
                                                    params.num_layers());
  const auto want = tensor_views(expected);
  const auto have = tensor_views(params);
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].rows != have[i].rows || want[i].cols != have[i].cols) {
      throw ValidationError("tensor " + have[i].name + " has shape " + std::to_string(have[i].rows) +
                            "x" + std::to_string(have[i].cols) + ", expected " +
                            std::to_string(want[i].rows) + "x" + std::to_string(want[i].cols));
    }
    const Eigen::Map<const Matrix<T>> values(have[i].data, have[i].rows, have[i].cols);
    if (!values.allFinite()) throw ValidationError("tensor " + have[i].name + " is not finite");
  }
}

template <typename T>
BasicBilstmParams<T> init_params(int input_size, int hidden_size, int num_layers,
                                 std::uint64_t seed) {
  auto params = BasicBilstmParams<T>::zeros(input_size, hidden_size, num_layers);
  std::mt19937_64 rng(seed);
  for (auto& view : tensor_views(params)) {
    if (view.cols == 1) continue;  // biases
    const bool head = view.name.rfind("output_", 0) == 0;
    const double fan_in = head ? 2.0 * hidden_size : static_cast<double>(view.cols);
    const double s = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-s, s);
    for (Index k = 0; k < view.size(); ++k) view.data[k] = static_cast<T>(dist(rng));
  }
  for (auto& layer : params.layers) {
    for (auto* dir : {&layer.forward, &layer.backward}) {
      dir->bias.segment(kForgetGate * hidden_size, hidden_size).setOnes();
    }
  }
  return params;
}

template <typename T>
CellState<T> lstm_cell_forward(const Vector<T>& x, const Vector<T>& h_prev, const Vector<T>& c_prev,
                               const LstmDirectionParams<T>& params) {
  const Index h = params.recurrent_weights.cols();
  if (params.input_weights.rows() != 4 * h || params.recurrent_weights.rows() != 4 * h ||
      params.bias.size() != 4 * h || params.input_weights.cols() != x.size() ||
      h_prev.size() != h || c_prev.size() != h) {
    throw ValidationError("LSTM cell dimension mismatch");
  }
  Vector<T> pre = params.input_weights * x + params.recurrent_weights * h_prev + params.bias;
  const auto i = sigmoid(pre.segment(kInputGate * h, h).array());
  const auto f = sigmoid(pre.segment(kForgetGate * h, h).array());
  const auto g = pre.segment(kCellGate * h, h).array().tanh();
  const auto o = sigmoid(pre.segment(kOutputGate * h, h).array());
  CellState<T> out;
  out.cell = (f * c_prev.array() + i * g).matrix();
  out.hidden = (o * out.cell.array().tanh()).matrix();
  return out;
}

Matrix<double> features_to_matrix(const std::vector<FeatureVector>& features) {
  Matrix<double> m(static_cast<Index>(kFeatureDim), static_cast<Index>(features.size()));
  for (std::size_t t = 0; t < features.size(); ++t) {
    m.col(static_cast<Index>(t)) =
        Eigen::Map<const Vector<double>>(features[t].data(), static_cast<Index>(kFeatureDim));
  }
  return m;
}

namespace {

template <typename T>
struct DirectionTrace {
  Matrix<T> gates;   // post-activation i, f, g, o; 4H x T
  Matrix<T> cells;   // H x T
  Matrix<T> hidden;  // H x T
};

template <typename T>
struct NetworkTrace {
  std::vector<DirectionTrace<T>> forward;
  std::vector<DirectionTrace<T>> backward;
  std::vector<Matrix<T>> outputs;  // 2H x T per layer
  Matrix<T> logits;
};

// Runs one direction over the whole sequence. The backward direction walks
// t = T-1 .. 0 and its "previous" step is t + 1.
template <typename T>
void run_direction(const MatrixRef<T>& x, const LstmDirectionParams<T>& p, bool reverse,
                   DirectionTrace<T>& trace) {
  const Index h = p.recurrent_weights.cols();
  const Index steps = x.cols();
  trace.gates.noalias() = p.input_weights * x;
  trace.gates.colwise() += p.bias;
  trace.cells.resize(h, steps);
  trace.hidden.resize(h, steps);
  for (Index k = 0; k < steps; ++k) {
    const Index t = reverse ? steps - 1 - k : k;
    const Index prev = reverse ? t + 1 : t - 1;
    auto gate = trace.gates.col(t);
    if (k > 0) gate.noalias() += p.recurrent_weights * trace.hidden.col(prev);
    gate.segment(0, 2 * h) = sigmoid(gate.segment(0, 2 * h).array()).matrix();
    gate.segment(kCellGate * h, h) = gate.segment(kCellGate * h, h).array().tanh().matrix();
    gate.segment(kOutputGate * h, h) = sigmoid(gate.segment(kOutputGate * h, h).array()).matrix();
    const auto i = gate.segment(kInputGate * h, h).array();
    const auto g = gate.segment(kCellGate * h, h).array();
    if (k > 0) {
      const auto f = gate.segment(kForgetGate * h, h).array();
      trace.cells.col(t) = (f * trace.cells.col(prev).array() + i * g).matrix();
    } else {
      trace.cells.col(t) = (i * g).matrix();
    }
    trace.hidden.col(t) =
        (gate.segment(kOutputGate * h, h).array() * trace.cells.col(t).array().tanh()).matrix();
  }
}

template <typename T>
void run_network(const MatrixRef<T>& inputs, const BasicBilstmParams<T>& params,
                 NetworkTrace<T>& trace) {
  if (inputs.cols() < 1) throw ValidationError("sequence is empty");
  if (inputs.rows() != params.input_size()) {
    throw ValidationError("input size " + std::to_string(inputs.rows()) +
                          " does not match network input size " +
                          std::to_string(params.input_size()));
  }
  const std::size_t layers = params.layers.size();
  const Index h = params.hidden_size();
  trace.forward.resize(layers);
  trace.backward.resize(layers);
  trace.outputs.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const MatrixRef<T> x = l == 0 ? inputs : MatrixRef<T>(trace.outputs[l - 1]);
    run_direction<T>(x, params.layers[l].forward, false, trace.forward[l]);
    run_direction<T>(x, params.layers[l].backward, true, trace.backward[l]);
    auto& out = trace.outputs[l];
    out.resize(2 * h, inputs.cols());
    out.topRows(h) = trace.forward[l].hidden;
    out.bottomRows(h) = trace.backward[l].hidden;
  }
  trace.logits.noalias() = params.output_forward * trace.forward.back().hidden;
  trace.logits.noalias() += params.output_backward * trace.backward.back().hidden;
  trace.logits.colwise() += params.output_bias;
}

template <typename T>
void backprop_direction(const MatrixRef<T>& x, const LstmDirectionParams<T>& p, bool reverse,
                        const DirectionTrace<T>& trace, const Matrix<T>& d_hidden,
                        LstmDirectionParams<T>& grad, Matrix<T>& d_input) {
  const Index h = p.recurrent_weights.cols();
  const Index steps = x.cols();
  Matrix<T> d_pre(4 * h, steps);
  Vector<T> dh_next = Vector<T>::Zero(h);
  Vector<T> dc_next = Vector<T>::Zero(h);
  Eigen::Array<T, Eigen::Dynamic, 1> dh(h), dc(h), tanh_c(h);
  for (Index k = steps - 1; k >= 0; --k) {
    const Index t = reverse ? steps - 1 - k : k;
    const Index prev = reverse ? t + 1 : t - 1;
    const auto gate = trace.gates.col(t);
    const auto i = gate.segment(kInputGate * h, h).array();
    const auto f = gate.segment(kForgetGate * h, h).array();
    const auto g = gate.segment(kCellGate * h, h).array();
    const auto o = gate.segment(kOutputGate * h, h).array();
    tanh_c = trace.cells.col(t).array().tanh();
    dh = d_hidden.col(t).array() + dh_next.array();
    dc = dh * o * (T(1) - tanh_c.square()) + dc_next.array();

    auto d = d_pre.col(t);
    d.segment(kInputGate * h, h) = (dc * g * i * (T(1) - i)).matrix();
    if (k > 0) {
      d.segment(kForgetGate * h, h) =
          (dc * trace.cells.col(prev).array() * f * (T(1) - f)).matrix();
    } else {
      d.segment(kForgetGate * h, h).setZero();
    }
    d.segment(kCellGate * h, h) = (dc * i * (T(1) - g.square())).matrix();
    d.segment(kOutputGate * h, h) = (dh * tanh_c * o * (T(1) - o)).matrix();
    dc_next = (dc * f).matrix();
    dh_next.noalias() = p.recurrent_weights.transpose() * d;
  }
  grad.input_weights.noalias() += d_pre * x.transpose();
  grad.bias += d_pre.rowwise().sum();
  if (steps > 1) {
    if (reverse) {
      grad.recurrent_weights.noalias() +=
          d_pre.leftCols(steps - 1) * trace.hidden.rightCols(steps - 1).transpose();
    } else {
      grad.recurrent_weights.noalias() +=
          d_pre.rightCols(steps - 1) * trace.hidden.leftCols(steps - 1).transpose();
    }
  }
  d_input.noalias() += p.input_weights.transpose() * d_pre;
}

}  // namespace

template <typename T>
Matrix<T> bilstm_forward(const MatrixRef<T>& inputs, const BasicBilstmParams<T>& params) {
  NetworkTrace<T> trace;
  run_network<T>(inputs, params, trace);
  return std::move(trace.logits);
}

template <typename T>
std::vector<double> boundary_probabilities(const MatrixRef<T>& logits) {
  if (logits.rows() != kNumClasses) throw ValidationError("expected 2 logits per frame");
  std::vector<double> p(static_cast<std::size_t>(logits.cols()));
  for (Index t = 0; t < logits.cols(); ++t) {
    // softmax over two classes reduces to a logistic of the difference
    const double diff = static_cast<double>(logits(kBoundaryClass, t)) -
                        static_cast<double>(logits(1 - kBoundaryClass, t));
    p[static_cast<std::size_t>(t)] = 1.0 / (1.0 + std::exp(-diff));
  }
  return p;
}

template <typename T>
double accumulate_gradient(const MatrixRef<T>& inputs, std::span<const std::uint8_t> labels,
                           const BasicBilstmParams<T>& params, const LossWeights& weights, T scale,
                           BasicBilstmParams<T>& grads) {
  if (static_cast<Index>(labels.size()) != inputs.cols()) {
    throw ValidationError("sequence has " + std::to_string(inputs.cols()) + " frames but " +
                          std::to_string(labels.size()) + " labels");
  }
  NetworkTrace<T> trace;
  run_network<T>(inputs, params, trace);

  const Index steps = inputs.cols();
  Matrix<T> d_logits(kNumClasses, steps);
  double total = 0.0;
  for (Index t = 0; t < steps; ++t) {
    const int target = labels[static_cast<std::size_t>(t)] ? kBoundaryClass : 1 - kBoundaryClass;
    const double w = target == kBoundaryClass ? weights.positive : weights.negative;
    const double z0 = static_cast<double>(trace.logits(0, t));
    const double z1 = static_cast<double>(trace.logits(1, t));
    const double top = std::max(z0, z1);
    const double lse = top + std::log(std::exp(z0 - top) + std::exp(z1 - top));
    const double p0 = std::exp(z0 - lse);
    const double p1 = std::exp(z1 - lse);
    total -= w * ((target == 0 ? z0 : z1) - lse);
    d_logits(0, t) = static_cast<T>(static_cast<double>(scale) * w * (p0 - (target == 0 ? 1.0 : 0.0)));
    d_logits(1, t) = static_cast<T>(static_cast<double>(scale) * w * (p1 - (target == 1 ? 1.0 : 0.0)));
  }

  const std::size_t layers = params.layers.size();
  const Index h = params.hidden_size();
  grads.output_forward.noalias() += d_logits * trace.forward.back().hidden.transpose();
  grads.output_backward.noalias() += d_logits * trace.backward.back().hidden.transpose();
  grads.output_bias += d_logits.rowwise().sum();

  Matrix<T> d_fwd = params.output_forward.transpose() * d_logits;
  Matrix<T> d_bwd = params.output_backward.transpose() * d_logits;
  for (std::size_t l = layers; l-- > 0;) {
    const MatrixRef<T> x = l == 0 ? inputs : MatrixRef<T>(trace.outputs[l - 1]);
    Matrix<T> d_input = Matrix<T>::Zero(x.rows(), steps);
    backprop_direction<T>(x, params.layers[l].forward, false, trace.forward[l], d_fwd,
                          grads.layers[l].forward, d_input);
    backprop_direction<T>(x, params.layers[l].backward, true, trace.backward[l], d_bwd,
                          grads.layers[l].backward, d_input);
    if (l > 0) {
      d_fwd = d_input.topRows(h);
      d_bwd = d_input.bottomRows(h);
    }
  }
  return total;
}

template <typename T>
LossAndGrad<T> loss_and_grad(const MatrixRef<T>& inputs, std::span<const std::uint8_t> labels,
                             const BasicBilstmParams<T>& params, const LossWeights& weights) {
  if (labels.empty()) throw ValidationError("sequence is empty");
  LossAndGrad<T> out;
  out.grads = BasicBilstmParams<T>::zeros(params.input_size(), params.hidden_size(),
                                          params.num_layers());
  const double m = static_cast<double>(labels.size());
  out.loss = accumulate_gradient<T>(inputs, labels, params, weights, static_cast<T>(1.0 / m),
                                    out.grads) /
             m;
  return out;
}

template <typename T>
AdamState<T> AdamState<T>::for_params(const BasicBilstmParams<T>& params) {
  AdamState<T> state;
  state.first_moment =
      BasicBilstmParams<T>::zeros(params.input_size(), params.hidden_size(), params.num_layers());
  state.second_moment = state.first_moment;
  return state;
}

template <typename T>
void adam_step(BasicBilstmParams<T>& params, const BasicBilstmParams<T>& grads,
               AdamState<T>& state, const AdamConfig& config) {
  auto p = tensor_views(params);
  const auto g = tensor_views(grads);
  auto m = tensor_views(state.first_moment);
  auto v = tensor_views(state.second_moment);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ValidationError("Adam: parameter, gradient and moment shapes differ");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T step_size = static_cast<T>(config.learning_rate / correction1);
  const T root_c2 = static_cast<T>(std::sqrt(correction2));
  const T eps = static_cast<T>(config.epsilon);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].size() != p[k].size()) throw ValidationError("Adam: shape mismatch in " + p[k].name);
    auto theta = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(p[k].data, p[k].size());
    const auto grad = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(g[k].data, g[k].size());
    auto m1 = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(m[k].data, m[k].size());
    auto m2 = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(v[k].data, v[k].size());
    m1 = b1 * m1 + (T(1) - b1) * grad;
    m2 = b2 * m2 + (T(1) - b2) * grad.square();
    // lr * m_hat / (sqrt(v_hat) + eps), with the corrections folded in
    theta -= step_size * m1 / (m2.sqrt() / root_c2 + eps);
  }
}

std::vector<Segment> predict_segments(std::span<const double> probabilities, double threshold,
                                      int min_length) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("boundary threshold must lie in (0, 1)");
  }
  const int frames = static_cast<int>(probabilities.size());
  std::vector<int> events;  // 1-based frames
  for (int t = 0; t < frames;) {
    if (!(probabilities[t] > threshold)) {
      ++t;
      continue;
    }
    int best = t;
    int u = t;
    for (; u < frames && probabilities[u] > threshold; ++u) {
      if (probabilities[u] > probabilities[best]) best = u;
    }
    events.push_back(best + 1);
    t = u;
  }
  std::vector<Segment> out;
  for (std::size_t k = 0; k < events.size(); k += 2) {
    const Segment s{events[k], k + 1 < events.size() ? events[k + 1] : frames};
    if (s.length() >= min_length) out.push_back(s);
  }
  return out;
}

#define CONSEG_INSTANTIATE(T)                                                                   \
  template struct BasicBilstmParams<T>;                                                         \
  template BasicBilstmParams<float> BasicBilstmParams<T>::cast<float>() const;                  \
  template BasicBilstmParams<double> BasicBilstmParams<T>::cast<double>() const;                \
  template std::vector<TensorView<T>> tensor_views(BasicBilstmParams<T>&);                      \
  template std::vector<TensorView<const T>> tensor_views(const BasicBilstmParams<T>&);          \
  template void validate(const BasicBilstmParams<T>&);                                          \
  template BasicBilstmParams<T> init_params<T>(int, int, int, std::uint64_t);                   \
  template CellState<T> lstm_cell_forward(const Vector<T>&, const Vector<T>&, const Vector<T>&, \
                                          const LstmDirectionParams<T>&);                       \
  template Matrix<T> bilstm_forward(const MatrixRef<T>&, const BasicBilstmParams<T>&);          \
  template std::vector<double> boundary_probabilities(const MatrixRef<T>&);                     \
  template double accumulate_gradient(const MatrixRef<T>&, std::span<const std::uint8_t>,       \
                                      const BasicBilstmParams<T>&, const LossWeights&, T,       \
                                      BasicBilstmParams<T>&);                                   \
  template LossAndGrad<T> loss_and_grad(const MatrixRef<T>&, std::span<const std::uint8_t>,     \
                                        const BasicBilstmParams<T>&, const LossWeights&);       \
  template struct AdamState<T>;                                                                 \
  template void adam_step(BasicBilstmParams<T>&, const BasicBilstmParams<T>&, AdamState<T>&,    \
                          const AdamConfig&);

CONSEG_INSTANTIATE(float)
CONSEG_INSTANTIATE(double)

#undef CONSEG_INSTANTIATE

}  // namespace conseg
