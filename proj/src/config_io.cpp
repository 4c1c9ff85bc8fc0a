#include "conseg/config_io.hpp"

#include "conseg/error.hpp"

#include <json.hpp>

namespace conseg {

namespace {

using nlohmann::json;

json parse_object(std::string_view text, const char* what) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": invalid JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
  return doc;
}

// Reads `key` into `field` when present, with a typed error message.
template <typename Field>
void read(const json& doc, const char* key, Field& field, const char* what) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    field = it->get<Field>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(what) + ": bad value for '" + key + "'");
  }
}

void reject_unknown(const json& doc, std::initializer_list<const char*> known, const char* what) {
  for (const auto& item : doc.items()) {
    bool found = false;
    for (const char* k : known) found = found || item.key() == k;
    if (!found) throw ValidationError(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

json range_json(IntRange r) { return json::array({r.min, r.max}); }

void read_range(const json& doc, const char* key, IntRange& range, const char* what) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
      !(*it)[1].is_number_integer()) {
    throw ValidationError(std::string(what) + ": '" + key + "' must be [min, max]");
  }
  range = {(*it)[0].get<int>(), (*it)[1].get<int>()};
}

}  // namespace

std::string train_config_to_json(const TrainConfig& c) {
  json doc = json::object();
  doc["hidden_size"] = c.hidden_size;
  doc["num_layers"] = c.num_layers;
  doc["pos_weight_ratio"] = c.pos_weight_ratio;
  doc["learning_rate"] = c.learning_rate;
  doc["batch_frames"] = c.batch_frames;
  doc["max_epochs"] = c.max_epochs;
  doc["boundary_threshold"] = c.boundary_threshold;
  doc["min_gesture_len"] = c.min_gesture_len;
  doc["seed"] = c.seed;
  doc["beta1"] = c.beta1;
  doc["beta2"] = c.beta2;
  doc["epsilon"] = c.epsilon;
  doc["lr_decay_epoch"] = c.lr_decay_epoch;
  doc["dilation"] = c.dilation;
  doc["label_mode"] = c.label_mode == LabelMode::boundary ? "boundary" : "in_segment";
  doc["precision"] = to_string(c.precision);
  return doc.dump();
}

TrainConfig train_config_from_json(std::string_view text) {
  constexpr const char* what = "train config";
  const json doc = parse_object(text, what);
  reject_unknown(doc,
                 {"hidden_size", "num_layers", "pos_weight_ratio", "learning_rate", "batch_frames",
                  "max_epochs", "boundary_threshold", "min_gesture_len", "seed", "beta1", "beta2",
                  "epsilon", "lr_decay_epoch", "dilation", "label_mode", "precision"},
                 what);
  TrainConfig c;
  read(doc, "hidden_size", c.hidden_size, what);
  read(doc, "num_layers", c.num_layers, what);
  read(doc, "pos_weight_ratio", c.pos_weight_ratio, what);
  read(doc, "learning_rate", c.learning_rate, what);
  read(doc, "batch_frames", c.batch_frames, what);
  read(doc, "max_epochs", c.max_epochs, what);
  read(doc, "boundary_threshold", c.boundary_threshold, what);
  read(doc, "min_gesture_len", c.min_gesture_len, what);
  read(doc, "seed", c.seed, what);
  read(doc, "beta1", c.beta1, what);
  read(doc, "beta2", c.beta2, what);
  read(doc, "epsilon", c.epsilon, what);
  read(doc, "lr_decay_epoch", c.lr_decay_epoch, what);
  read(doc, "dilation", c.dilation, what);
  std::string label_mode = c.label_mode == LabelMode::boundary ? "boundary" : "in_segment";
  read(doc, "label_mode", label_mode, what);
  if (label_mode == "boundary") {
    c.label_mode = LabelMode::boundary;
  } else if (label_mode == "in_segment") {
    c.label_mode = LabelMode::in_segment;
  } else {
    throw ValidationError("train config: label_mode must be 'boundary' or 'in_segment'");
  }
  std::string precision = to_string(c.precision);
  read(doc, "precision", precision, what);
  c.precision = parse_precision(precision);
  validate(c);
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json doc = json::object();
  doc["num_videos"] = c.num_videos;
  doc["gestures_per_video"] = range_json(c.gestures_per_video);
  doc["gesture_length"] = range_json(c.gesture_length);
  doc["gap_length"] = range_json(c.gap_length);
  doc["noise_sigma"] = c.noise_sigma;
  doc["motion_amplitude"] = c.motion_amplitude;
  doc["dropout"] = c.dropout;
  doc["seed"] = c.seed;
  doc["id_prefix"] = c.id_prefix;
  return doc.dump();
}

SynthConfig synth_config_from_json(std::string_view text) {
  constexpr const char* what = "synth config";
  const json doc = parse_object(text, what);
  reject_unknown(doc,
                 {"num_videos", "gestures_per_video", "gesture_length", "gap_length", "noise_sigma",
                  "motion_amplitude", "dropout", "seed", "id_prefix"},
                 what);
  SynthConfig c;
  read(doc, "num_videos", c.num_videos, what);
  read_range(doc, "gestures_per_video", c.gestures_per_video, what);
  read_range(doc, "gesture_length", c.gesture_length, what);
  read_range(doc, "gap_length", c.gap_length, what);
  read(doc, "noise_sigma", c.noise_sigma, what);
  read(doc, "motion_amplitude", c.motion_amplitude, what);
  read(doc, "dropout", c.dropout, what);
  read(doc, "seed", c.seed, what);
  read(doc, "id_prefix", c.id_prefix, what);
  validate(c);
  return c;
}

}  // namespace conseg
