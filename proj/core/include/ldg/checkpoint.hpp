#pragma once

#include <optional>
#include <string>

#include "ldg/discovery.hpp"
#include "ldg/model.hpp"

namespace ldg {

struct Checkpoint {
  std::uint32_t version = 1;
  std::uint64_t seed = 0;
  Toggles toggles;
  int prompt_len = 0;
  int num_domains = 0;
  Model model;
  std::optional<PseudoDomainAssignment> assignment;
  int selected_epoch = 0;
  double selected_metric = 0.0;
};

// Raw little-endian binary; save -> load round-trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ldg
