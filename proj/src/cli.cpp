#include "conseg/cli.hpp"

#include "conseg/checkpoint.hpp"
#include "conseg/config_io.hpp"
#include "conseg/error.hpp"
#include "conseg/io_formats.hpp"
#include "conseg/metrics.hpp"
#include "conseg/synth.hpp"
#include "conseg/train.hpp"
#include "conseg/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

namespace conseg {

namespace {

namespace fs = std::filesystem;

constexpr const char* kAnnotationsFile = "annotations.txt";
constexpr const char* kKeypointsDir = "keypoints";

struct ScoreArgs {
  std::string pred;
  std::string gt;
  std::vector<double> thresholds = default_thresholds();
  std::string aggregation = "micro";
  std::string out;
};

struct SynthArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

struct FeaturizeArgs {
  std::string keypoints;
  std::string out;
  std::string gap_policy = "hold";
};

struct TrainArgs {
  std::string corpus;
  std::string config;
  std::string out;
  std::string heldout;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<double> stop_at_csr;
  double stop_iou = 0.7;
};

struct SegmentArgs {
  std::string model;
  std::string keypoints;
  std::string out;
  std::optional<double> threshold;
  std::optional<int> min_length;
};

void make_directories(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string fixed4(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

// Errors inside a file are re-raised with the file name in front.
template <typename F>
auto parse_file(const fs::path& path, F&& parse) {
  const std::string text = read_text_file(path);
  try {
    return parse(text);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<KeypointFrame> read_keypoints(const fs::path& path) {
  return parse_file(path, [](std::string_view text) { return parse_keypoints_csv(text); });
}

AnnotationFile read_annotations(const fs::path& path) {
  return parse_file(path, [](std::string_view text) { return parse_segments_file(text); });
}

struct CorpusVideo {
  VideoAnnotation annotation;
  std::vector<KeypointFrame> frames;
};

std::vector<CorpusVideo> read_corpus(const fs::path& dir) {
  const AnnotationFile annotations = read_annotations(dir / kAnnotationsFile);
  if (annotations.videos.empty()) throw ValidationError(dir.string() + ": corpus has no videos");
  std::vector<CorpusVideo> corpus;
  corpus.reserve(annotations.videos.size());
  for (const auto& ann : annotations.videos) {
    auto frames = read_keypoints(dir / kKeypointsDir / (ann.video_id + ".csv"));
    if (frames.size() != static_cast<std::size_t>(ann.frame_count)) {
      throw ValidationError("video '" + ann.video_id + "': " + std::to_string(frames.size()) +
                            " keypoint rows but frame_count " + std::to_string(ann.frame_count));
    }
    corpus.push_back({ann, std::move(frames)});
  }
  return corpus;
}

int cmd_score(const ScoreArgs& args, std::ostream& out) {
  const AnnotationFile pred = read_annotations(args.pred);
  const AnnotationFile gt = read_annotations(args.gt);
  for (const auto& video : pred.videos) {
    if (gt.find(video.video_id) == nullptr) {
      throw ValidationError("prediction for unknown video '" + video.video_id + "'");
    }
  }
  if (gt.videos.empty()) throw ValidationError(args.gt + ": no videos");

  static const VideoAnnotation kNoPrediction;
  std::vector<VideoPair> pairs;
  pairs.reserve(gt.videos.size());
  bool labeled = true;
  for (const auto& g : gt.videos) {
    const VideoAnnotation* p = pred.find(g.video_id);
    if (p != nullptr && p->frame_count != g.frame_count) {
      throw ValidationError("video '" + g.video_id + "': frame_count " +
                            std::to_string(p->frame_count) + " in predictions, " +
                            std::to_string(g.frame_count) + " in ground truth");
    }
    const VideoAnnotation& pv = p != nullptr ? *p : kNoPrediction;
    labeled = labeled && g.fully_labeled() && pv.fully_labeled();
    pairs.push_back({g.video_id, pv.spans(), g.spans()});
  }

  CsrReport report = csr_corpus(pairs, args.thresholds, parse_aggregation(args.aggregation));
  if (labeled) {
    std::vector<LabeledVideo> videos;
    std::vector<int> pred_labels;
    std::vector<int> gt_labels;
    for (const auto& g : gt.videos) {
      const VideoAnnotation* p = pred.find(g.video_id);
      const auto& pred_segments = p != nullptr ? p->segments : kNoPrediction.segments;
      videos.push_back({g.video_id, pred_segments, g.segments, g.frame_count});
      const auto aligned = aligned_prediction_labels(pred_segments, g.segments);
      pred_labels.insert(pred_labels.end(), aligned.begin(), aligned.end());
      for (const auto& s : g.segments) gt_labels.push_back(*s.label);
    }
    report.mji = mji_corpus(videos);
    if (!gt_labels.empty()) report.recognition_rate = recognition_rate(pred_labels, gt_labels);
  }

  if (!args.out.empty()) write_text_file(args.out, write_report_json(report));

  std::string header = "IoU";
  std::string row = "CSR";
  for (const auto& entry : report.csr) {
    header += "\t" + format_double(entry.threshold);
    row += "\t" + fixed4(entry.csr);
  }
  out << header << "\n" << row << "\n";
  if (report.mji) out << "MJI\t" << fixed4(*report.mji) << "\n";
  if (report.recognition_rate) out << "Rec\t" << fixed4(*report.recognition_rate) << "\n";
  out << "videos " << report.video_count << ", aggregation " << to_string(report.aggregation)
      << "\n";
  for (double r : report.csr_above_one) {
    out << "warning: CSR above 1 at IoU " << format_double(r) << "\n";
  }
  return kExitOk;
}

int cmd_synth(const SynthArgs& args, std::ostream& out) {
  SynthConfig config;
  if (!args.config.empty()) {
    config = parse_file(args.config, [](std::string_view t) { return synth_config_from_json(t); });
  }
  if (args.seed) config.seed = *args.seed;
  validate(config);
  const auto corpus = generate_corpus(config);

  const fs::path dir(args.out_dir);
  make_directories(dir / kKeypointsDir);
  AnnotationFile annotations;
  for (const auto& video : corpus) {
    write_text_file(dir / kKeypointsDir / (video.annotation.video_id + ".csv"),
                    write_keypoints_csv(video.frames));
    annotations.videos.push_back(video.annotation);
  }
  write_text_file(dir / kAnnotationsFile, write_segments_file(annotations));
  out << "wrote " << corpus.size() << " videos to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_featurize(const FeaturizeArgs& args, std::ostream& out) {
  const auto frames = read_keypoints(args.keypoints);
  const auto features = featurize_sequence(frames, parse_gap_policy(args.gap_policy));
  write_text_file(args.out, write_features_csv(features));
  out << "wrote " << features.vectors.size() << " feature vectors to " << args.out << "\n";
  return kExitOk;
}

struct HeldOut {
  std::vector<Matrix<double>> inputs;
  std::vector<std::vector<Segment>> gt;
};

double heldout_csr(const HeldOut& heldout, const BilstmParams& params, const TrainConfig& config,
                   double iou_threshold) {
  std::vector<VideoPair> pairs(heldout.inputs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].pred = detect_segments(params, heldout.inputs[i], config.boundary_threshold,
                                    config.min_gesture_len);
    pairs[i].gt = heldout.gt[i];
  }
  return csr_corpus(pairs, {iou_threshold}).csr.front().csr;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  TrainConfig config;
  if (!args.config.empty()) {
    config = parse_file(args.config, [](std::string_view t) { return train_config_from_json(t); });
  }
  if (args.epochs) config.max_epochs = *args.epochs;
  if (args.seed) config.seed = *args.seed;
  validate(config);
  if (args.stop_at_csr && args.heldout.empty()) {
    throw ValidationError("--stop-at-csr needs --heldout");
  }
  if (!(args.stop_iou > 0.0 && args.stop_iou <= 1.0)) {
    throw ValidationError("--stop-iou must lie in (0, 1]");
  }

  std::vector<TrainingSequence> sequences;
  for (const auto& video : read_corpus(args.corpus)) {
    sequences.push_back(make_training_sequence(video.frames, video.annotation, config));
  }
  HeldOut heldout;
  if (!args.heldout.empty()) {
    for (const auto& video : read_corpus(args.heldout)) {
      heldout.inputs.push_back(
          features_to_matrix(featurize_sequence(video.frames, GapPolicy::hold).vectors));
      heldout.gt.push_back(video.annotation.spans());
    }
  }

  bool reached = false;
  const auto on_epoch = [&](const EpochReport& report) {
    out << "epoch " << report.epoch << " loss " << format_double(report.loss);
    if (!heldout.inputs.empty()) {
      const double csr = heldout_csr(heldout, *report.params, config, args.stop_iou);
      out << " heldout_csr@" << format_double(args.stop_iou) << " " << fixed4(csr);
      reached = args.stop_at_csr && csr >= *args.stop_at_csr;
    }
    out << "\n" << std::flush;
    return !reached;
  };
  TrainResult result = train(sequences, config, on_epoch);
  if (args.stop_at_csr && !reached) {
    err << "warning: held-out CSR target " << format_double(*args.stop_at_csr)
        << " not reached in " << result.epoch_loss.size() << " epochs\n";
  }
  save_model(BoundaryModel{config, std::move(result.params)}, args.out);
  out << "wrote model to " << args.out << "\n";
  return kExitOk;
}

int cmd_segment(const SegmentArgs& args, std::ostream& out) {
  BoundaryModel model = parse_file(args.model, [](std::string_view t) {
    return deserialize_model(t);
  });
  if (args.threshold) model.config.boundary_threshold = *args.threshold;
  if (args.min_length) model.config.min_gesture_len = *args.min_length;
  validate(model.config);

  std::vector<fs::path> inputs;
  const fs::path source(args.keypoints);
  std::error_code ec;
  if (fs::is_directory(source, ec)) {
    for (const auto& entry : fs::directory_iterator(source, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") {
        inputs.push_back(entry.path());
      }
    }
    if (ec) throw IoError("cannot list " + source.string() + ": " + ec.message());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw ValidationError(source.string() + ": no .csv files");
  } else {
    inputs.push_back(source);
  }

  AnnotationFile predictions;
  for (const auto& path : inputs) {
    const auto frames = read_keypoints(path);
    VideoAnnotation video{path.stem().string(), static_cast<int>(frames.size()), {}};
    for (const Segment& s : detect_segments(model, frames)) video.segments.push_back({s, {}});
    predictions.videos.push_back(std::move(video));
  }
  write_text_file(args.out, write_segments_file(predictions));
  out << "segmented " << predictions.videos.size() << " videos into " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous gesture segmentation toolkit", std::string(kToolName)};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score predicted segments against ground truth");
  score_cmd->add_option("--pred", score.pred, "Predicted segments file")->required();
  score_cmd->add_option("--gt", score.gt, "Ground-truth segments file")->required();
  score_cmd->add_option("--thresholds", score.thresholds, "Comma-separated IoU thresholds")
      ->delimiter(',');
  score_cmd->add_option("--agg", score.aggregation, "CSR aggregation: micro or macro");
  score_cmd->add_option("--out", score.out, "Write the JSON report here");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic keypoint corpus");
  synth_cmd->add_option("--config", synth.config, "Synthesis config (JSON)");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Override the config seed");

  FeaturizeArgs featurize;
  auto* featurize_cmd = app.add_subcommand("featurize", "Convert keypoints to feature vectors");
  featurize_cmd->add_option("--keypoints", featurize.keypoints, "Keypoints CSV")->required();
  featurize_cmd->add_option("--out", featurize.out, "Features CSV")->required();
  featurize_cmd->add_option("--gap-policy", featurize.gap_policy,
                            "Frames without detections: hold or drop");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the Bi-LSTM boundary detector");
  train_cmd->add_option("--corpus", train_args.corpus, "Corpus directory")->required();
  train_cmd->add_option("--config", train_args.config, "Training config (JSON)");
  train_cmd->add_option("--out", train_args.out, "Model checkpoint")->required();
  train_cmd->add_option("--epochs", train_args.epochs, "Override max_epochs");
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");
  train_cmd->add_option("--heldout", train_args.heldout, "Held-out corpus scored every epoch");
  train_cmd->add_option("--stop-at-csr", train_args.stop_at_csr,
                        "Stop once held-out CSR reaches this value");
  train_cmd->add_option("--stop-iou", train_args.stop_iou, "IoU threshold of the held-out CSR");

  SegmentArgs segment;
  auto* segment_cmd = app.add_subcommand("segment", "Detect gesture segments with a model");
  segment_cmd->add_option("--model", segment.model, "Model checkpoint")->required();
  segment_cmd->add_option("--keypoints", segment.keypoints, "Keypoints CSV or directory of CSVs")
      ->required();
  segment_cmd->add_option("--out", segment.out, "Predicted segments file")->required();
  segment_cmd->add_option("--threshold", segment.threshold, "Boundary probability threshold");
  segment_cmd->add_option("--min-length", segment.min_length, "Minimum segment length");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (score_cmd->parsed()) return cmd_score(score, out);
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (featurize_cmd->parsed()) return cmd_featurize(featurize, out);
    if (train_cmd->parsed()) return cmd_train(train_args, out, err);
    return cmd_segment(segment, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace conseg
