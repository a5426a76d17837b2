#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ldg/backbone.hpp"
#include "ldg/prompts.hpp"

namespace ldg {

// Component toggles: P domain prompts, A adapter, M domain mixup,
// G prompt generator. A, M and G each presuppose P.
struct Toggles {
  bool P = false;
  bool A = false;
  bool M = false;
  bool G = false;

  void validate() const;
  std::string tag() const;  // e.g. "baseline", "+P+A+M+G"

  static Toggles none() { return {}; }
  static Toggles full() { return {true, true, true, true}; }
};

struct Model {
  EncoderConfig cfg;
  EncoderParams enc;
  std::optional<PromptBank> bank;
  std::optional<Adapter> adapter;

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;

  static Model build(const EncoderConfig& cfg, const Toggles& toggles, int prompt_len,
                     int num_domains, std::uint64_t master_seed);
  static Model zeros_like(const Model& other);
};

void zero_all(std::vector<Matrix*> tensors);
double squared_norm(const std::vector<const Matrix*>& tensors);

// Decoupled-weight-decay Adam over a fixed tensor list.
struct AdamW {
  double lr = 3e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step_count = 0;

  void init(const std::vector<const Matrix*>& params);
  void step(std::vector<Matrix*> params, const std::vector<const Matrix*>& grads);
};

}  // namespace ldg
