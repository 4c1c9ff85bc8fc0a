#include "conseg/train.hpp"

#include "conseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace conseg {

std::string to_string(Precision precision) {
  return precision == Precision::float32 ? "float32" : "float64";
}

Precision parse_precision(const std::string& text) {
  if (text == "float32") return Precision::float32;
  if (text == "float64") return Precision::float64;
  throw ValidationError("precision must be 'float32' or 'float64', got '" + text + "'");
}

void validate(const TrainConfig& config) {
  const auto fail = [](const std::string& what) { throw ValidationError("train config: " + what); };
  if (config.hidden_size < 1) fail("hidden_size must be positive");
  if (config.num_layers < 1) fail("num_layers must be positive");
  if (!(config.pos_weight_ratio > 0.0) || !std::isfinite(config.pos_weight_ratio)) {
    fail("pos_weight_ratio must be positive");
  }
  if (!(config.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (config.batch_frames < 1) fail("batch_frames must be positive");
  if (config.max_epochs < 0) fail("max_epochs must be non-negative");
  if (!(config.boundary_threshold > 0.0 && config.boundary_threshold < 1.0)) {
    fail("boundary_threshold must lie in (0, 1)");
  }
  if (config.min_gesture_len < 1) fail("min_gesture_len must be positive");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (!(config.epsilon > 0.0)) fail("epsilon must be positive");
  if (config.lr_decay_epoch < 0) fail("lr_decay_epoch must be non-negative");
  if (config.dilation < 0) fail("dilation must be non-negative");
}

TrainingSequence make_training_sequence(const std::vector<KeypointFrame>& frames,
                                        const VideoAnnotation& annotation,
                                        const TrainConfig& config) {
  if (frames.size() != static_cast<std::size_t>(annotation.frame_count)) {
    throw ValidationError("video '" + annotation.video_id + "' has " +
                          std::to_string(frames.size()) + " keypoint frames but frame_count " +
                          std::to_string(annotation.frame_count));
  }
  const auto features = featurize_sequence(frames, GapPolicy::hold);
  return {features_to_matrix(features.vectors),
          boundary_labels(annotation, config.dilation, config.label_mode)};
}

namespace {

// Saturated gates drive gradients into the subnormal range, where x86 float
// arithmetic is several times slower. Flush them to zero while in scope.
class FlushDenormals {
public:
#if defined(__SSE__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

private:
  unsigned int saved_;
#endif
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;
};

template <typename T>
TrainResult train_impl(const std::vector<TrainingSequence>& corpus, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  const int input_size = static_cast<int>(corpus.front().inputs.rows());
  std::vector<Matrix<T>> inputs;
  inputs.reserve(corpus.size());
  for (const auto& seq : corpus) inputs.push_back(seq.inputs.template cast<T>());

  auto params = init_params<T>(input_size, config.hidden_size, config.num_layers, config.seed);
  auto state = AdamState<T>::for_params(params);
  auto grads = BasicBilstmParams<T>::zeros(input_size, config.hidden_size, config.num_layers);
  const LossWeights weights = config.loss_weights();
  AdamConfig adam = config.adam();

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  BilstmParams snapshot;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    adam.learning_rate = config.learning_rate;
    if (config.lr_decay_epoch > 0 && epoch >= config.lr_decay_epoch) adam.learning_rate *= 0.1;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_sum = 0.0;
    double epoch_frames = 0.0;
    std::size_t begin = 0;
    std::size_t batch_index = 0;
    while (begin < order.size()) {
      std::size_t end = begin;
      std::size_t frames = 0;
      while (end < order.size() && frames < static_cast<std::size_t>(config.batch_frames)) {
        frames += corpus[order[end]].labels.size();
        ++end;
      }
      for (auto& view : tensor_views(grads)) {
        std::fill(view.data, view.data + view.size(), T(0));
      }
      const T scale = static_cast<T>(1.0 / static_cast<double>(frames));
      double batch_sum = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t s = order[k];
        batch_sum += accumulate_gradient<T>(inputs[s], corpus[s].labels, params, weights, scale,
                                            grads);
      }
      if (!std::isfinite(batch_sum)) {
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index) + " (learning rate " +
                            std::to_string(adam.learning_rate) + ")");
      }
      adam_step(params, grads, state, adam);
      epoch_sum += batch_sum;
      epoch_frames += static_cast<double>(frames);
      begin = end;
      ++batch_index;
    }
    result.epoch_loss.push_back(epoch_sum / epoch_frames);
    if (on_epoch) {
      snapshot = params.template cast<double>();
      if (!on_epoch(EpochReport{epoch, result.epoch_loss.back(), &snapshot})) break;
    }
  }
  result.params = params.template cast<double>();
  return result;
}

}  // namespace

TrainResult train(const std::vector<TrainingSequence>& corpus, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  if (corpus.empty()) throw ValidationError("training corpus is empty");
  const auto input_size = corpus.front().inputs.rows();
  if (input_size < 1) throw ValidationError("training inputs have no features");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& seq = corpus[i];
    if (seq.inputs.cols() < 1) {
      throw ValidationError("training sequence " + std::to_string(i) + " is empty");
    }
    if (seq.inputs.rows() != input_size) {
      throw ValidationError("training sequence " + std::to_string(i) + " has feature size " +
                            std::to_string(seq.inputs.rows()));
    }
    if (static_cast<std::size_t>(seq.inputs.cols()) != seq.labels.size()) {
      throw ValidationError("training sequence " + std::to_string(i) +
                            " has mismatched frame and label counts");
    }
  }
  FlushDenormals guard;
  if (config.precision == Precision::float64) return train_impl<double>(corpus, config, on_epoch);
  return train_impl<float>(corpus, config, on_epoch);
}

std::vector<Segment> detect_segments(const BilstmParams& params, const Matrix<double>& inputs,
                                     double threshold, int min_gesture_len) {
  FlushDenormals guard;
  const Matrix<double> logits = bilstm_forward<double>(inputs, params);
  const auto p = boundary_probabilities<double>(logits);
  return predict_segments(p, threshold, min_gesture_len);
}

std::vector<Segment> detect_segments(const BoundaryModel& model,
                                     const std::vector<KeypointFrame>& frames) {
  const auto features = featurize_sequence(frames, GapPolicy::hold);
  return detect_segments(model.params, features_to_matrix(features.vectors),
                         model.config.boundary_threshold, model.config.min_gesture_len);
}

}  // namespace conseg
