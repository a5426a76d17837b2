#include "ldg/objectives.hpp"

#include <cmath>

#include "ldg/rng.hpp"

namespace ldg {

namespace {

constexpr double kWeightClamp = 1e-7;

void check_label(int label, int num_classes) {
  if (label < 0 || label >= num_classes)
    throw argument_error("class label " + std::to_string(label) + " outside [0," +
                         std::to_string(num_classes) + ")");
}

Image mix_images(const Image& a, const Image& b, double lambda) {
  if (a.height != b.height || a.width != b.width)
    throw argument_error("mixup requires images of equal shape");
  Image out(a.height, a.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = lambda * a.pixels[i] + (1.0 - lambda) * b.pixels[i];
  return out;
}

// Runs per_sample over [0, n) on a fixed chunk grid, merging losses (and
// chunk-local gradient buffers) in chunk order so sums do not depend on the
// thread count.
double accumulate_over_samples(std::size_t n, const Model& model, Model* grads,
                               const std::function<double(std::size_t, Model*)>& per_sample) {
  const std::size_t chunks = std::min(kGradChunks, n);
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<Model> chunk_grads;
  if (grads) {
    chunk_grads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) chunk_grads.push_back(Model::zeros_like(model));
  }
  parallel_chunks(n, chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    Model* g = grads ? &chunk_grads[c] : nullptr;
    for (std::size_t i = lo; i < hi; ++i) chunk_loss[c] += per_sample(i, g);
  });
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) total += chunk_loss[c];
  if (grads) {
    auto dst = grads->tensors();
    for (std::size_t c = 0; c < chunks; ++c) {
      auto src = chunk_grads[c].tensors();
      for (std::size_t t = 0; t < dst.size(); ++t) *dst[t] += *src[t];
    }
  }
  return total;
}

std::mt19937_64 sample_dropout_rng(std::uint64_t dropout_seed, std::size_t i) {
  return std::mt19937_64(splitmix64(dropout_seed ^ splitmix64(i + 1)));
}

std::vector<Matrix> generated_prompts(const Model& model) {
  std::vector<Matrix> out;
  out.reserve(model.bank->M);
  for (int m = 0; m < model.bank->M; ++m) out.push_back(generate_prompt(*model.bank, m));
  return out;
}

}  // namespace

LossBreakdown combine_losses(double mixup_loss_value, double weighted_ce,
                             double weight_supervision, double lambda_w) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v))
      throw training_error(std::string("non-finite loss component: ") + name);
  };
  check(mixup_loss_value, "mixup_loss");
  check(weighted_ce, "weighted_ce");
  check(weight_supervision, "weight_supervision");
  check(lambda_w, "lambda_w");
  LossBreakdown out;
  out.mixup_loss = mixup_loss_value;
  out.weighted_ce = weighted_ce;
  out.weight_supervision = weight_supervision;
  out.lambda_w = lambda_w;
  out.total = mixup_loss_value + weighted_ce + lambda_w * weight_supervision;
  check(out.total, "total");
  return out;
}

double softmax_cross_entropy(const Vector& logits, int label, Vector* dlogits) {
  check_label(label, static_cast<int>(logits.size()));
  double mx = logits.maxCoeff();
  Vector shifted = logits.array() - mx;
  double lse = std::log(shifted.array().exp().sum());
  double loss = lse - shifted(label);
  if (dlogits) {
    *dlogits = (shifted.array() - lse).exp();
    (*dlogits)(label) -= 1.0;
  }
  return loss;
}

double mixed_cross_entropy(const Vector& logits, int y_i, int y_j, double lambda,
                           Vector* dlogits) {
  Vector d_i, d_j;
  double li = softmax_cross_entropy(logits, y_i, dlogits ? &d_i : nullptr);
  double lj = softmax_cross_entropy(logits, y_j, dlogits ? &d_j : nullptr);
  if (dlogits) *dlogits = lambda * d_i + (1.0 - lambda) * d_j;
  return lambda * li + (1.0 - lambda) * lj;
}

double domain_loss(const Matrix& logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    throw argument_error("logit rows do not match label count");
  if (labels.empty()) throw argument_error("domain_loss on an empty batch");
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    total += softmax_cross_entropy(logits.row(r).transpose(), labels[r]);
  return total / static_cast<double>(labels.size());
}

std::vector<MixupSample> mixup_batch(const std::vector<const LabeledImage*>& batch,
                                     const std::vector<int>& domains, int num_domains,
                                     double alpha, std::mt19937_64& rng,
                                     bool* single_domain_fallback) {
  if (batch.empty()) throw argument_error("mixup_batch on an empty batch");
  if (batch.size() != domains.size())
    throw argument_error("mixup_batch: domain list does not match batch size");
  if (alpha <= 0.0) throw argument_error("mixup alpha must be positive");

  bool fallback = false;
  std::vector<MixupSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < batch.size(); ++j)
      if (domains[j] != domains[i]) candidates.push_back(j);
    if (candidates.empty()) {
      if (num_domains >= 2) fallback = true;
      for (std::size_t j = 0; j < batch.size(); ++j)
        if (j != i) candidates.push_back(j);
      if (candidates.empty()) candidates.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    std::size_t j = candidates[pick(rng)];
    double lambda = sample_beta(rng, alpha);
    lambda = std::max(lambda, 1.0 - lambda);
    MixupSample ms;
    ms.x_mix = mix_images(batch[i]->image, batch[j]->image, lambda);
    ms.y_i = batch[i]->class_label;
    ms.y_j = batch[j]->class_label;
    ms.lambda = lambda;
    ms.domain_i = domains[i];
    ms.domain_j = domains[j];
    out.push_back(std::move(ms));
  }
  if (single_domain_fallback) *single_domain_fallback = fallback;
  return out;
}

double mixup_loss(const Model& model, const std::vector<MixupSample>& samples, Model* grads,
                  std::uint64_t dropout_seed) {
  if (!model.bank) throw argument_error("mixup_loss requires domain prompts");
  if (samples.empty()) throw argument_error("mixup_loss on an empty batch");
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double total = accumulate_over_samples(
      samples.size(), model, grads, [&](std::size_t i, Model* g) {
        const MixupSample& ms = samples[i];
        Matrix prompt = generate_prompt(*model.bank, ms.domain_i);
        ForwardCache cache;
        auto rng = sample_dropout_rng(dropout_seed, i);
        encoder_forward(model.cfg, model.enc, ms.x_mix, prompt, /*train_mode=*/true, &rng,
                        cache);
        Vector dlogits;
        double loss = mixed_cross_entropy(cache.logits, ms.y_i, ms.y_j, ms.lambda,
                                          g ? &dlogits : nullptr);
        if (g) {
          dlogits *= inv_n;
          Matrix d_prompt = encoder_backward(model.cfg, model.enc, cache, dlogits, g->enc);
          model.bank->accumulate_prompt_grad(ms.domain_i, d_prompt, *g->bank);
        }
        return loss;
      });
  return total * inv_n;
}

double domain_prompt_loss(const Model& model, const std::vector<const LabeledImage*>& batch,
                          const std::vector<int>& domains, Model* grads,
                          std::uint64_t dropout_seed) {
  if (!model.bank) throw argument_error("domain_prompt_loss requires domain prompts");
  if (batch.empty()) throw argument_error("domain_prompt_loss on an empty batch");
  if (batch.size() != domains.size())
    throw argument_error("domain list does not match batch size");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = accumulate_over_samples(
      batch.size(), model, grads, [&](std::size_t i, Model* g) {
        Matrix prompt = generate_prompt(*model.bank, domains[i]);
        ForwardCache cache;
        auto rng = sample_dropout_rng(dropout_seed, i);
        encoder_forward(model.cfg, model.enc, batch[i]->image, prompt, /*train_mode=*/true,
                        &rng, cache);
        Vector dlogits;
        double loss = softmax_cross_entropy(cache.logits, batch[i]->class_label,
                                            g ? &dlogits : nullptr);
        if (g) {
          dlogits *= inv_n;
          Matrix d_prompt = encoder_backward(model.cfg, model.enc, cache, dlogits, g->enc);
          model.bank->accumulate_prompt_grad(domains[i], d_prompt, *g->bank);
        }
        return loss;
      });
  return total * inv_n;
}

double erm_loss(const Model& model, const std::vector<const LabeledImage*>& batch,
                Model* grads, std::uint64_t dropout_seed) {
  if (batch.empty()) throw argument_error("erm_loss on an empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const Matrix empty_prompt(0, model.cfg.embed_dim);
  double total = accumulate_over_samples(
      batch.size(), model, grads, [&](std::size_t i, Model* g) {
        ForwardCache cache;
        auto rng = sample_dropout_rng(dropout_seed, i);
        encoder_forward(model.cfg, model.enc, batch[i]->image, empty_prompt,
                        /*train_mode=*/true, &rng, cache);
        Vector dlogits;
        double loss = softmax_cross_entropy(cache.logits, batch[i]->class_label,
                                            g ? &dlogits : nullptr);
        if (g) {
          dlogits *= inv_n;
          encoder_backward(model.cfg, model.enc, cache, dlogits, g->enc);
        }
        return loss;
      });
  return total * inv_n;
}

DetachedInference make_detached_inference(const Model& model,
                                          const std::vector<const LabeledImage*>& batch) {
  if (!model.bank) throw argument_error("detached inference requires domain prompts");
  DetachedInference out;
  out.cls_features.resize(batch.size(), model.cfg.embed_dim);
  parallel_chunks(batch.size(), kGradChunks, [&](std::size_t, std::size_t lo, std::size_t hi) {
    ForwardCache cache;
    for (std::size_t i = lo; i < hi; ++i) {
      encoder_forward(model.cfg, model.enc, batch[i]->image, Matrix(0, model.cfg.embed_dim),
                      /*train_mode=*/false, nullptr, cache);
      out.cls_features.row(i) = cache.cls;
    }
  });
  out.prompts = generated_prompts(model);
  return out;
}

WeightedLossResult weighted_loss(const Model& model,
                                 const std::vector<const LabeledImage*>& batch,
                                 const std::vector<int>& domains, double lambda_w,
                                 bool double_norm, Model* grads,
                                 std::uint64_t dropout_seed,
                                 const DetachedInference* fixed) {
  if (!model.bank || !model.adapter)
    throw argument_error("weighted_loss requires domain prompts and an adapter");
  if (batch.empty()) throw argument_error("weighted_loss on an empty batch");
  if (batch.size() != domains.size())
    throw argument_error("domain list does not match batch size");

  const int M = model.bank->M;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double norm = double_norm ? 1.0 / (static_cast<double>(M) * M)
                                  : 1.0 / static_cast<double>(M);

  std::vector<double> domain_count(M, 0.0);
  for (int dom : domains) {
    if (dom < 0 || dom >= M)
      throw argument_error("pseudo-domain id " + std::to_string(dom) + " outside [0," +
                           std::to_string(M) + ")");
    domain_count[dom] += 1.0;
  }

  // Domain prompts are constants along this path.
  const std::vector<Matrix> prompts = fixed ? fixed->prompts : generated_prompts(model);

  WeightedLossResult result;
  result.weights.resize(batch.size(), M);
  std::vector<double> sup_terms(batch.size(), 0.0);

  double ce_total = accumulate_over_samples(
      batch.size(), model, grads, [&](std::size_t i, Model* g) {
        const LabeledImage& sample = *batch[i];
        const int dom = domains[i];
        const double coeff = norm / domain_count[dom];

        // (1) detached prompt-free feature, inference behavior
        RowVector cls_detached;
        if (fixed) {
          cls_detached = fixed->cls_features.row(i);
        } else {
          ForwardCache plain;
          encoder_forward(model.cfg, model.enc, sample.image,
                          Matrix(0, model.cfg.embed_dim), /*train_mode=*/false, nullptr,
                          plain);
          cls_detached = plain.cls;
        }

        // (2) adapter weights
        AdapterCache acache;
        Vector w = adapter_weights_row(*model.adapter, cls_detached, &acache);
        result.weights.row(i) = w.transpose();

        // (3)+(4) weighted prompt, prompted forward
        Matrix p_weighted = Matrix::Zero(model.bank->s, model.bank->d);
        for (int m = 0; m < M; ++m) p_weighted += w(m) * prompts[m];
        ForwardCache prompted;
        auto rng = sample_dropout_rng(dropout_seed, i);
        encoder_forward(model.cfg, model.enc, sample.image, p_weighted, /*train_mode=*/true,
                        &rng, prompted);

        Vector dlogits;
        double ce = softmax_cross_entropy(prompted.logits, sample.class_label,
                                          g ? &dlogits : nullptr);

        // weight supervision on clamped weights
        Vector w_clamped = w.cwiseMax(kWeightClamp).cwiseMin(1.0 - kWeightClamp);
        double sup = -std::log(w_clamped(dom));
        for (int t = 0; t < M; ++t)
          if (t != dom) sup += -std::log(1.0 - w_clamped(t));
        sup_terms[i] = coeff * sup;

        if (g) {
          dlogits *= inv_n;
          Matrix d_prompt = encoder_backward(model.cfg, model.enc, prompted, dlogits, g->enc);
          Vector dw(M);
          for (int m = 0; m < M; ++m)
            dw(m) = d_prompt.cwiseProduct(prompts[m]).sum();
          // supervision gradient, zero where the clamp is active
          for (int t = 0; t < M; ++t) {
            if (w(t) <= kWeightClamp || w(t) >= 1.0 - kWeightClamp) continue;
            if (t == dom)
              dw(t) += lambda_w * coeff * (-1.0 / w_clamped(t));
            else
              dw(t) += lambda_w * coeff * (1.0 / (1.0 - w_clamped(t)));
          }
          adapter_backward_row(*model.adapter, acache, dw, g->adapter.value());
        }
        return ce;
      });

  result.ce = ce_total * inv_n;
  double sup_total = 0.0;
  for (double s : sup_terms) sup_total += s;
  result.weight_supervision = sup_total;
  return result;
}

LossBreakdown total_loss_batch(const Model& model,
                               const std::vector<const LabeledImage*>& batch,
                               const std::vector<int>& domains,
                               const std::vector<MixupSample>& mixup_samples,
                               const ObjectiveSettings& settings, Model* grads,
                               std::uint64_t dropout_seed,
                               const DetachedInference* fixed) {
  settings.toggles.validate();
  double base;
  if (!settings.toggles.P) {
    base = erm_loss(model, batch, grads, splitmix64(dropout_seed + 1));
  } else if (settings.toggles.M) {
    base = mixup_loss(model, mixup_samples, grads, splitmix64(dropout_seed + 1));
  } else {
    base = domain_prompt_loss(model, batch, domains, grads, splitmix64(dropout_seed + 1));
  }
  double weighted_ce = 0.0, weight_sup = 0.0;
  if (settings.toggles.A) {
    auto wres = weighted_loss(model, batch, domains, settings.lambda_w, settings.double_norm,
                              grads, splitmix64(dropout_seed + 2), fixed);
    weighted_ce = wres.ce;
    weight_sup = wres.weight_supervision;
  }
  return combine_losses(base, weighted_ce, weight_sup, settings.toggles.A ? settings.lambda_w : 0.0);
}

}  // namespace ldg
