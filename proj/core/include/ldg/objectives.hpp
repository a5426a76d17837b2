#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ldg/data.hpp"
#include "ldg/model.hpp"

namespace ldg {

struct MixupSample {
  Image x_mix;
  int y_i = 0;
  int y_j = 0;
  double lambda = 1.0;  // folded to [0.5, 1]; x_i dominates
  int domain_i = 0;
  int domain_j = 0;
};

struct LossBreakdown {
  double mixup_loss = 0.0;  // holds the plain domain/ERM loss when mixup is off
  double weighted_ce = 0.0;
  double weight_supervision = 0.0;
  double lambda_w = 0.0;
  double total = 0.0;
};

// total = mixup_loss + weighted_ce + lambda_w * weight_supervision.
// Throws training_error naming the first non-finite component.
LossBreakdown combine_losses(double mixup_loss, double weighted_ce,
                             double weight_supervision, double lambda_w);

// Single-sample softmax cross-entropy; optionally emits dlogits.
double softmax_cross_entropy(const Vector& logits, int label, Vector* dlogits = nullptr);

// lambda * CE(logits, y_i) + (1 - lambda) * CE(logits, y_j).
double mixed_cross_entropy(const Vector& logits, int y_i, int y_j, double lambda,
                           Vector* dlogits = nullptr);

// Mean cross-entropy over batch rows of logits.
double domain_loss(const Matrix& logits, const std::vector<int>& labels);

// Draws a cross-domain partner for every sample: partner uniform over batch
// members of a different pseudo-domain, lambda ~ Beta(alpha, alpha) folded to
// max(lambda, 1-lambda). A batch covering a single domain (with M >= 2)
// falls back to in-domain partners and reports it through the flag.
std::vector<MixupSample> mixup_batch(const std::vector<const LabeledImage*>& batch,
                                     const std::vector<int>& domains, int num_domains,
                                     double alpha, std::mt19937_64& rng,
                                     bool* single_domain_fallback = nullptr);

// Mixed samples are routed through the prompt of the lambda-dominant
// sample's domain. Returns the batch-mean loss; grads optional.
double mixup_loss(const Model& model, const std::vector<MixupSample>& samples,
                  Model* grads = nullptr, std::uint64_t dropout_seed = 0);

// Plain domain-expert loss (Eq-style routing without mixing): every sample
// through its own domain's prompt.
double domain_prompt_loss(const Model& model, const std::vector<const LabeledImage*>& batch,
                          const std::vector<int>& domains, Model* grads = nullptr,
                          std::uint64_t dropout_seed = 0);

// ERM loss: prompt-free forward + CE.
double erm_loss(const Model& model, const std::vector<const LabeledImage*>& batch,
                Model* grads = nullptr, std::uint64_t dropout_seed = 0);

struct WeightedLossResult {
  double ce = 0.0;                  // CE under the weighted prompt, batch mean
  double weight_supervision = 0.0;  // unscaled by lambda_w
  Matrix weights;                   // B x M adapter weights
};

// The quantities the weighted loss treats as constants: prompt-free class
// features and the generated domain prompts. Finite-difference checks pin
// these so the differentiated function matches the backward pass.
struct DetachedInference {
  Matrix cls_features;          // B x d
  std::vector<Matrix> prompts;  // M generated prompts, s x d each
};

DetachedInference make_detached_inference(const Model& model,
                                          const std::vector<const LabeledImage*>& batch);

// Simulated-inference loss: detached prompt-free features feed the adapter,
// the weighted prompt is built from detached domain prompts, and the second
// forward carries the classification gradient. Weight supervision groups
// batch samples by pseudo-domain; double_norm keeps the printed 1/M * 1/M
// normalization, otherwise a single 1/M is applied.
WeightedLossResult weighted_loss(const Model& model,
                                 const std::vector<const LabeledImage*>& batch,
                                 const std::vector<int>& domains, double lambda_w,
                                 bool double_norm = true, Model* grads = nullptr,
                                 std::uint64_t dropout_seed = 0,
                                 const DetachedInference* fixed = nullptr);

struct ObjectiveSettings {
  Toggles toggles;
  double lambda_w = 1.0;
  bool double_norm = true;
};

// The full per-batch training objective. `mixup_samples` must be prepared by
// mixup_batch when the mixup toggle is on and is ignored otherwise. The
// result is deterministic given the inputs and dropout_seed.
LossBreakdown total_loss_batch(const Model& model,
                               const std::vector<const LabeledImage*>& batch,
                               const std::vector<int>& domains,
                               const std::vector<MixupSample>& mixup_samples,
                               const ObjectiveSettings& settings, Model* grads = nullptr,
                               std::uint64_t dropout_seed = 0,
                               const DetachedInference* fixed = nullptr);

}  // namespace ldg
