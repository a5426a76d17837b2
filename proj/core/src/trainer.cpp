#include "ldg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "ldg/csv.hpp"
#include "ldg/evalkit.hpp"
#include "ldg/rng.hpp"

namespace ldg {

namespace {

Vector softmax_vec(const Vector& logits) {
  double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp();
  return e / e.sum();
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, Stream::shuffle, static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// Materializes the (possibly augmented) batch. Augmentation draws are keyed
// by (epoch, dataset index), independent of batch composition.
std::vector<LabeledImage> materialize_batch(const Dataset& train,
                                            const std::vector<std::size_t>& order,
                                            std::size_t lo, std::size_t hi, bool augment,
                                            std::uint64_t seed, int epoch) {
  std::vector<LabeledImage> batch;
  batch.reserve(hi - lo);
  for (std::size_t k = lo; k < hi; ++k) {
    const LabeledImage& src = train.samples[order[k]];
    LabeledImage item = src;
    if (augment) {
      auto rng = make_rng(seed, Stream::augment, static_cast<std::uint64_t>(epoch),
                          static_cast<std::uint64_t>(order[k]));
      item.image = augment_image(src.image, rng);
    }
    batch.push_back(std::move(item));
  }
  return batch;
}

std::vector<const LabeledImage*> batch_pointers(const std::vector<LabeledImage>& batch) {
  std::vector<const LabeledImage*> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(&s);
  return out;
}

// Shared by warmup_epoch and the warmup phase of fit: one ERM batch step.
double erm_training_step(Model& model, const std::vector<const LabeledImage*>& batch,
                         AdamW& opt_enc, std::uint64_t dropout_seed) {
  Model grads = Model::zeros_like(model);
  double loss = erm_loss(model, batch, &grads, dropout_seed);
  opt_enc.step(model.enc.tensors(), std::as_const(grads.enc).tensors());
  return loss;
}

KMeansResult cluster_features(const Matrix& features, const std::vector<int>& classes,
                              int M, std::uint64_t seed, bool per_class) {
  if (!per_class) return kmeans(features, M, seed);
  // experimental: cluster each class separately into M groups (ids are not
  // aligned across classes)
  KMeansResult out;
  out.assignment.assign(features.rows(), 0);
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < features.rows(); ++i) by_class[classes[i]].push_back(i);
  for (auto& [cls, rows] : by_class) {
    Matrix sub(rows.size(), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(r) = features.row(rows[r]);
    KMeansResult km = kmeans(sub, M, derive_seed(seed, Stream::kmeans, cls));
    for (std::size_t r = 0; r < rows.size(); ++r) out.assignment[rows[r]] = km.assignment[r];
  }
  out.centroids = Matrix::Zero(M, features.cols());
  std::vector<double> count(M, 0.0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.centroids.row(out.assignment[i]) += features.row(i);
    count[out.assignment[i]] += 1.0;
  }
  for (int m = 0; m < M; ++m)
    if (count[m] > 0) out.centroids.row(m) /= count[m];
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    out.inertia += (features.row(i) - out.centroids.row(out.assignment[i])).squaredNorm();
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  encoder.validate();
  toggles.validate();
  if (num_domains < 1) throw config_error("num_domains must be >= 1");
  if (prompt_len < 1) throw config_error("prompt_len must be >= 1");
  if (epochs < 1) throw config_error("epochs must be >= 1");
  if (toggles.P && (cluster_epoch < 1 || cluster_epoch >= epochs))
    throw config_error("cluster_epoch must satisfy 1 <= cluster_epoch < epochs");
  if (cluster_layer < 1 || cluster_layer > encoder.depth)
    throw config_error("cluster_layer outside [1, depth]");
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
  if (patience < 1) throw config_error("patience must be >= 1");
  if (alpha <= 0.0) throw config_error("alpha must be positive");
  if (lr <= 0.0) throw config_error("lr must be positive");
  if (lambda_w < 0.0) throw config_error("lambda_w must be non-negative");
  if (prompt_lr_multiplier <= 0.0) throw config_error("prompt_lr_multiplier must be positive");
  for (int l : diag_layers)
    if (l < 1 || l > encoder.depth) throw config_error("diag layer outside [1, depth]");
}

std::vector<double> warmup_epoch(Model& model, const Dataset& train, AdamW& optimizer,
                                 const TrainConfig& config, int epoch) {
  if (train.empty()) throw argument_error("warmup_epoch: empty training set");
  auto order = epoch_order(config.seed, epoch, train.size());
  std::vector<double> losses;
  std::size_t step_in_epoch = 0;
  for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
    std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(config.batch_size));
    auto batch = materialize_batch(train, order, lo, hi, config.augment, config.seed, epoch);
    auto batch_ptrs = batch_pointers(batch);
    ++step_in_epoch;
    std::uint64_t dropout_seed = derive_seed(config.seed, Stream::dropout,
                                             static_cast<std::uint64_t>(epoch), step_in_epoch);
    losses.push_back(erm_training_step(model, batch_ptrs, optimizer, dropout_seed));
  }
  return losses;
}

FitResult fit(const TrainConfig& config, const FitDatasets& data) {
  config.validate();
  if (!data.train || data.train->empty()) throw argument_error("fit: empty training set");
  if (!data.val || data.val->empty()) throw argument_error("fit: empty validation set");
  if (config.selection == TrainConfig::Selection::ood_val &&
      (!data.ood_val || data.ood_val->empty()))
    throw config_error("selection=ood_val requires an OOD validation set");
  if (config.num_threads > 0) set_thread_count(config.num_threads);

  const Dataset& train = *data.train;
  const Dataset& val_set =
      config.selection == TrainConfig::Selection::ood_val ? *data.ood_val : *data.val;

  FitResult result;
  Model model = Model::build(config.encoder, config.toggles, config.prompt_len,
                             config.num_domains, config.seed);

  AdamW opt_enc;
  opt_enc.lr = config.lr;
  opt_enc.weight_decay = config.weight_decay;
  opt_enc.init(std::as_const(model.enc).tensors());
  AdamW opt_bank, opt_adapter;
  if (model.bank) {
    opt_bank.lr = config.lr * config.prompt_lr_multiplier;
    opt_bank.weight_decay = config.weight_decay;
    opt_bank.init(std::as_const(*model.bank).tensors());
  }
  if (model.adapter) {
    opt_adapter.lr = config.lr;
    opt_adapter.weight_decay = config.weight_decay;
    opt_adapter.init(std::as_const(*model.adapter).tensors());
  }

  // frozen-backbone ablation keeps a reference copy to restore after steps
  std::vector<Matrix> backbone_snapshot;

  std::optional<PseudoDomainAssignment> assignment;
  std::map<int, std::vector<int>> diag_prev;

  Model best_model = model;
  std::optional<PseudoDomainAssignment> best_assignment;
  int best_epoch = -1;
  double best_metric = -std::numeric_limits<double>::infinity();
  double last_best_strict = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  long global_step = 0;

  ObjectiveSettings settings;
  settings.toggles = config.toggles;
  settings.lambda_w = config.lambda_w;
  settings.double_norm = config.double_norm;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const bool prompted_phase = config.toggles.P && epoch > config.cluster_epoch;

    auto order = epoch_order(config.seed, epoch, train.size());
    double loss_sum = 0.0;
    std::size_t sample_count = 0;
    std::size_t step_in_epoch = 0;

    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(config.batch_size));
      auto batch = materialize_batch(train, order, lo, hi, config.augment, config.seed, epoch);
      auto batch_ptrs = batch_pointers(batch);
      ++global_step;
      ++step_in_epoch;
      std::uint64_t dropout_seed = derive_seed(config.seed, Stream::dropout,
                                               static_cast<std::uint64_t>(epoch), step_in_epoch);

      LossBreakdown parts;
      try {
        if (!prompted_phase) {
          double loss = erm_training_step(model, batch_ptrs, opt_enc, dropout_seed);
          parts = combine_losses(loss, 0.0, 0.0, 0.0);
        } else {
          std::vector<int> domains;
          domains.reserve(batch.size());
          for (const auto& s : batch) domains.push_back(assignment->domain_of(s.sample_id));
          std::vector<MixupSample> mix;
          if (config.toggles.M) {
            auto mix_rng = make_rng(config.seed, Stream::mixup,
                                    static_cast<std::uint64_t>(epoch), step_in_epoch);
            bool fallback = false;
            mix = mixup_batch(batch_ptrs, domains, config.num_domains, config.alpha, mix_rng,
                              &fallback);
            if (fallback && !result.mixup_fallback_warned) {
              result.mixup_fallback_warned = true;
              std::cerr << "warning: single-domain batch, mixup fell back to in-domain "
                           "partners\n";
            }
          }
          Model grads = Model::zeros_like(model);
          parts = total_loss_batch(model, batch_ptrs, domains, mix, settings, &grads,
                                   dropout_seed);
          opt_enc.step(model.enc.tensors(), std::as_const(grads.enc).tensors());
          if (config.freeze_backbone) {
            auto live = model.enc.tensors();
            for (std::size_t t = 0; t + 2 < live.size(); ++t) *live[t] = backbone_snapshot[t];
          }
          if (model.bank)
            opt_bank.step(model.bank->tensors(), std::as_const(*grads.bank).tensors());
          if (model.adapter)
            opt_adapter.step(model.adapter->tensors(), std::as_const(*grads.adapter).tensors());
        }
      } catch (const training_error& e) {
        throw training_error(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(global_step) + ")");
      }

      result.step_log.push_back({global_step, epoch, parts});
      loss_sum += parts.total * static_cast<double>(hi - lo);
      sample_count += hi - lo;
    }

    // per-epoch clustering diagnostics over the warmup window
    bool diag_window = !config.toggles.P || epoch <= config.cluster_epoch;
    if (!config.diag_layers.empty() && diag_window) {
      auto rows = clustering_diagnostics(
          config.encoder, model.enc, train, config.diag_layers, config.num_domains,
          derive_seed(config.seed, Stream::kmeans, 0xD1A6, static_cast<std::uint64_t>(epoch)),
          epoch, diag_prev, config.normalize_style_features);
      result.diagnostics.insert(result.diagnostics.end(), rows.begin(), rows.end());
    }

    // one-time clustering at the end of the clustering epoch
    if (config.toggles.P && epoch == config.cluster_epoch) {
      StyleFeatureMatrix feats =
          collect_style_features(config.encoder, model.enc, train, config.cluster_layer, epoch);
      if (config.normalize_style_features) l2_normalize_rows(feats.features);
      std::vector<int> classes;
      classes.reserve(train.size());
      for (const auto& s : train.samples) classes.push_back(s.class_label);
      KMeansResult km =
          cluster_features(feats.features, classes, config.num_domains,
                           derive_seed(config.seed, Stream::kmeans, 0xC1), config.per_class_clustering);
      assignment = assign_pseudo_domains(train, feats, km, assignment);
      if (config.freeze_backbone) {
        backbone_snapshot.clear();
        for (const Matrix* t : std::as_const(model.enc).tensors())
          backbone_snapshot.push_back(*t);
      }
    }

    double val = evaluate_metric(model, config.toggles, val_set, config.val_metric,
                                 /*prompted_path=*/prompted_phase);
    result.history.epochs.push_back(
        {epoch, sample_count ? loss_sum / static_cast<double>(sample_count) : 0.0, val, false});

    // selection and early stopping only consider epochs whose validation ran
    // through the deployment inference path; ties keep the latest epoch (the
    // most-trained model at that metric), patience counts strict improvements
    const bool candidate = !config.toggles.P || prompted_phase;
    if (candidate) {
      if (val >= best_metric) {
        best_metric = val;
        best_epoch = epoch;
        best_model = model;
        best_assignment = assignment;
      }
      if (val > last_best_strict) {
        last_best_strict = val;
        since_best = 0;
      } else {
        ++since_best;
      }
      if (since_best >= config.patience) break;
    }
  }

  if (best_epoch < 0)
    throw training_error("no candidate epoch produced a validation metric");
  for (auto& rec : result.history.epochs)
    if (rec.epoch == best_epoch) rec.selected = true;
  result.history.selected_epoch = best_epoch;
  result.history.selected_metric = best_metric;
  result.model = std::move(best_model);
  result.assignment = std::move(best_assignment);
  return result;
}

Prediction predict(const Model& model, const Toggles& toggles,
                   const std::vector<const Image*>& images) {
  if (images.empty()) throw argument_error("predict on an empty batch");
  const std::size_t b = images.size();
  Prediction out;
  out.scores.resize(b, model.cfg.num_classes);
  if (!toggles.P || !model.bank) {
    BatchOutput plain = forward_plain(model.cfg, model.enc, images);
    for (std::size_t i = 0; i < b; ++i)
      out.scores.row(i) = softmax_vec(plain.logits.row(i).transpose()).transpose();
    out.weights.resize(0, 0);
    return out;
  }

  const int M = model.bank->M;
  out.weights.resize(b, M);
  const Vector uniform = Vector::Constant(M, 1.0 / static_cast<double>(M));
  parallel_chunks(b, kGradChunks, [&](std::size_t, std::size_t lo, std::size_t hi) {
    ForwardCache cache;
    for (std::size_t i = lo; i < hi; ++i) {
      encoder_forward(model.cfg, model.enc, *images[i], Matrix(0, model.cfg.embed_dim),
                      /*train_mode=*/false, nullptr, cache);
      Vector w = (toggles.A && model.adapter)
                     ? adapter_weights_row(*model.adapter, cache.cls)
                     : uniform;
      Matrix prompt = weighted_prompt(*model.bank, w);
      encoder_forward(model.cfg, model.enc, *images[i], prompt, /*train_mode=*/false, nullptr,
                      cache);
      out.scores.row(i) = softmax_vec(cache.logits).transpose();
      out.weights.row(i) = w.transpose();
    }
  });
  return out;
}

double evaluate_metric(const Model& model, const Toggles& toggles, const Dataset& dataset,
                       TrainConfig::Metric metric, bool prompted_path) {
  if (dataset.empty()) throw argument_error("evaluate_metric on an empty dataset");
  auto images = image_pointers(dataset);
  Matrix scores;
  if (prompted_path && toggles.P) {
    scores = predict(model, toggles, images).scores;
  } else {
    BatchOutput plain = forward_plain(model.cfg, model.enc, images);
    scores.resize(plain.logits.rows(), plain.logits.cols());
    for (Eigen::Index i = 0; i < plain.logits.rows(); ++i)
      scores.row(i) = softmax_vec(plain.logits.row(i).transpose()).transpose();
  }
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) labels.push_back(s.class_label);
  if (metric == TrainConfig::Metric::auc) return roc_auc_ovr(scores, labels);
  std::vector<int> preds(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    preds[i] = static_cast<int>(arg);
  }
  return accuracy(preds, labels);
}

void write_history_csv(const std::string& path, const TrainingHistory& history) {
  CsvWriter csv(path, {"epoch", "train_loss", "val_metric", "selected"});
  for (const auto& rec : history.epochs)
    csv.row({std::to_string(rec.epoch), format_double(rec.train_loss),
             format_double(rec.val_metric), rec.selected ? "1" : "0"});
}

void write_step_log_csv(const std::string& path, const std::vector<StepRecord>& rows) {
  CsvWriter csv(path, {"step", "epoch", "loss_total", "loss_mixup", "loss_weighted_ce",
                       "loss_weight_sup"});
  for (const auto& r : rows)
    csv.row({std::to_string(r.step), std::to_string(r.epoch), format_double(r.parts.total),
             format_double(r.parts.mixup_loss), format_double(r.parts.weighted_ce),
             format_double(r.parts.weight_supervision)});
}

void write_weight_stats_csv(const std::string& path, const Model& model,
                            const Toggles& toggles, const Dataset& dataset) {
  if (!toggles.P || !model.bank)
    throw argument_error("weight statistics require a prompt-enabled model");
  Prediction pred = predict(model, toggles, image_pointers(dataset));
  CsvWriter csv(path, {"domain", "weight_mean", "weight_std"});
  const double n = static_cast<double>(pred.weights.rows());
  for (int m = 0; m < model.bank->M; ++m) {
    double mean = pred.weights.col(m).mean();
    double var = (pred.weights.col(m).array() - mean).square().sum() / std::max(1.0, n - 1.0);
    csv.row({std::to_string(m), format_double(mean), format_double(std::sqrt(var))});
  }
}

}  // namespace ldg
