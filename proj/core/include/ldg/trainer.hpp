#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldg/data.hpp"
#include "ldg/discovery.hpp"
#include "ldg/model.hpp"
#include "ldg/objectives.hpp"

namespace ldg {

struct TrainConfig {
  EncoderConfig encoder;
  Toggles toggles;
  int num_domains = 4;  // M
  int prompt_len = 4;   // s
  int cluster_layer = 1;
  int cluster_epoch = 5;
  int epochs = 20;
  int batch_size = 64;
  double lr = 3e-4;
  double weight_decay = 1e-2;
  double alpha = 0.3;     // mixup Beta parameter
  double lambda_w = 1.0;  // weight-supervision coefficient
  bool double_norm = true;
  int patience = 22;
  std::uint64_t seed = 0;

  enum class Selection { train_domain_val, ood_val };
  Selection selection = Selection::train_domain_val;
  enum class Metric { auc, accuracy };
  Metric val_metric = Metric::auc;

  bool augment = true;
  bool normalize_style_features = true;
  bool per_class_clustering = false;
  // Freezes everything but the head during the prompted phase
  // (prompt-tuning ablation); warmup always trains end to end.
  bool freeze_backbone = false;
  double prompt_lr_multiplier = 1.0;
  std::vector<int> diag_layers;  // per-epoch clustering diagnostics when non-empty
  int num_threads = 0;           // 0 = hardware default

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  bool selected = false;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;
  double selected_metric = 0.0;
};

struct StepRecord {
  long step = 0;
  int epoch = 0;
  LossBreakdown parts;
};

struct FitDatasets {
  const Dataset* train = nullptr;
  const Dataset* val = nullptr;
  const Dataset* ood_val = nullptr;  // used when selection == ood_val
};

struct FitResult {
  Model model;  // parameters of the selected epoch
  TrainingHistory history;
  std::optional<PseudoDomainAssignment> assignment;
  std::vector<DiagnosticsRow> diagnostics;
  std::vector<StepRecord> step_log;
  bool mixup_fallback_warned = false;
};

// One epoch of plain ERM (prompt-free forward + CE). Prompt and adapter
// parameters are untouched; the optimizer must cover the encoder tensors.
// Returns the per-step batch losses.
std::vector<double> warmup_epoch(Model& model, const Dataset& train, AdamW& optimizer,
                                 const TrainConfig& config, int epoch);

// Two-phase schedule: ERM warmup through cluster_epoch, one-time clustering,
// then prompted training with the total loss. Prompt parameters receive no
// updates before the clustering epoch. Early stopping and checkpoint
// selection track the validation metric of the active inference path.
FitResult fit(const TrainConfig& config, const FitDatasets& data);

struct Prediction {
  Matrix scores;   // B x C softmax probabilities
  Matrix weights;  // B x M adapter weights (0 x 0 for prompt-free models)
};

// Deployment inference: prompt-free forward, adapter weights (uniform when
// no adapter), weighted prompt, prompted forward, softmax.
Prediction predict(const Model& model, const Toggles& toggles,
                   const std::vector<const Image*>& images);

double evaluate_metric(const Model& model, const Toggles& toggles, const Dataset& dataset,
                       TrainConfig::Metric metric, bool prompted_path);

void write_history_csv(const std::string& path, const TrainingHistory& history);
void write_step_log_csv(const std::string& path, const std::vector<StepRecord>& rows);

// Weight statistics per domain over a dataset: `domain,weight_mean,weight_std`.
void write_weight_stats_csv(const std::string& path, const Model& model,
                            const Toggles& toggles, const Dataset& dataset);

}  // namespace ldg
