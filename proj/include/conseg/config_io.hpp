#pragma once

// JSON encodings of the training and synthesis configurations. Keys mirror
// the struct fields; missing keys keep their defaults and unknown keys are
// rejected.

#include "conseg/synth.hpp"
#include "conseg/train.hpp"

#include <string>
#include <string_view>

namespace conseg {

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(std::string_view text);

std::string synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(std::string_view text);

}  // namespace conseg
