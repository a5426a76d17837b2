#pragma once

#include <string>
#include <vector>

#include "ldg/data.hpp"
#include "ldg/trainer.hpp"

namespace ldg {

// JSON-backed run configuration. Unknown keys are rejected; overrides use
// dotted keys ("train.lr=1e-3"). The JSON wire format stays an
// implementation detail of these functions.

TrainConfig parse_train_config(const std::string& json_text,
                               const std::vector<std::string>& overrides = {});
std::string train_config_json(const TrainConfig& config);

TrapSpec parse_trap_spec(const std::string& json_text,
                         const std::vector<std::string>& overrides = {});
std::string trap_spec_json(const TrapSpec& spec);

// Named starting points: "erm-desk", "pldg-desk".
TrainConfig preset_train_config(const std::string& name);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ldg
