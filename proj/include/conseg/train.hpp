#pragma once

#include "conseg/bilstm.hpp"
#include "conseg/features.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace conseg {

enum class Precision { float32, float64 };

std::string to_string(Precision precision);
Precision parse_precision(const std::string& text);

struct TrainConfig {
  int hidden_size = 128;
  int num_layers = 4;
  /// Weight of boundary frames relative to other frames (w0 / w1).
  double pos_weight_ratio = 40.0;
  double learning_rate = 0.01;
  /// Whole sequences are accumulated into one update until at least this
  /// many frames are covered.
  int batch_frames = 120;
  int max_epochs = 50;
  double boundary_threshold = 0.5;
  int min_gesture_len = 1;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Multiply the learning rate by 0.1 from this epoch on (1-based); 0 disables.
  int lr_decay_epoch = 0;
  /// Boundary label dilation used when building targets from annotations.
  int dilation = 1;
  LabelMode label_mode = LabelMode::boundary;
  Precision precision = Precision::float32;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  LossWeights loss_weights() const { return {pos_weight_ratio, 1.0}; }
};

/// Throws ValidationError on out-of-range fields.
void validate(const TrainConfig& config);

struct TrainingSequence {
  Matrix<double> inputs;  // feature_dim x T
  std::vector<std::uint8_t> labels;
};

/// Hold-policy features for every frame plus targets built with the config's
/// dilation and label mode. Throws ValidationError when the frame count
/// disagrees with the annotation.
TrainingSequence make_training_sequence(const std::vector<KeypointFrame>& frames,
                                        const VideoAnnotation& annotation,
                                        const TrainConfig& config);

struct EpochReport {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  const BilstmParams* params = nullptr;
};

/// Return false to stop training after this epoch.
using EpochCallback = std::function<bool(const EpochReport&)>;

struct TrainResult {
  BilstmParams params;
  /// Frame-weighted mean training loss of each epoch, measured during it.
  std::vector<double> epoch_loss;
};

/// Mini-batch Adam with exact per-sequence BPTT. Shuffling, initialization
/// and reduction order depend only on `config.seed`. Throws ValidationError
/// on an empty or inconsistent corpus and TrainingError on a non-finite loss.
TrainResult train(const std::vector<TrainingSequence>& corpus, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Trained detector plus the configuration it was trained with.
struct BoundaryModel {
  TrainConfig config;
  BilstmParams params;
};

/// Keypoints to segments: featurize (hold policy), forward pass, boundary
/// probabilities, segment extraction with the model's threshold.
std::vector<Segment> detect_segments(const BoundaryModel& model,
                                     const std::vector<KeypointFrame>& frames);

std::vector<Segment> detect_segments(const BilstmParams& params, const Matrix<double>& inputs,
                                     double threshold, int min_gesture_len);

}  // namespace conseg
