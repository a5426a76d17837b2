#include "ldg/model.hpp"

#include <cmath>

#include "ldg/rng.hpp"

namespace ldg {

void Toggles::validate() const {
  if ((A || M || G) && !P)
    throw config_error("toggles A, M and G each require prompt toggle P");
}

std::string Toggles::tag() const {
  if (!P) return "baseline";
  std::string t = "+P";
  if (A) t += "+A";
  if (M) t += "+M";
  if (G) t += "+G";
  return t;
}

Model Model::build(const EncoderConfig& cfg, const Toggles& toggles, int prompt_len,
                   int num_domains, std::uint64_t master_seed) {
  cfg.validate();
  toggles.validate();
  Model model;
  model.cfg = cfg;
  model.enc = EncoderParams::init(cfg, derive_seed(master_seed, Stream::init, 0));
  if (toggles.P) {
    auto mode = toggles.G ? PromptParam::generator : PromptParam::independent;
    model.bank = PromptBank::make(mode, prompt_len, cfg.embed_dim, num_domains,
                                  derive_seed(master_seed, Stream::init, 1));
  }
  if (toggles.A) {
    model.adapter = Adapter::make(cfg.embed_dim, cfg.embed_dim, num_domains,
                                  derive_seed(master_seed, Stream::init, 2));
  }
  return model;
}

Model Model::zeros_like(const Model& other) {
  Model model = other;
  for (Matrix* t : model.tensors()) t->setZero();
  return model;
}

std::vector<Matrix*> Model::tensors() {
  std::vector<Matrix*> out = enc.tensors();
  if (bank) {
    auto bt = bank->tensors();
    out.insert(out.end(), bt.begin(), bt.end());
  }
  if (adapter) {
    auto at = adapter->tensors();
    out.insert(out.end(), at.begin(), at.end());
  }
  return out;
}

std::vector<const Matrix*> Model::tensors() const {
  auto mut = const_cast<Model*>(this)->tensors();
  return std::vector<const Matrix*>(mut.begin(), mut.end());
}

void zero_all(std::vector<Matrix*> tensors) {
  for (Matrix* t : tensors) t->setZero();
}

double squared_norm(const std::vector<const Matrix*>& tensors) {
  double out = 0.0;
  for (const Matrix* t : tensors) out += t->squaredNorm();
  return out;
}

void AdamW::init(const std::vector<const Matrix*>& params) {
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Matrix* p : params) {
    m.push_back(Matrix::Zero(p->rows(), p->cols()));
    v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  step_count = 0;
}

void AdamW::step(std::vector<Matrix*> params, const std::vector<const Matrix*>& grads) {
  if (params.size() != m.size() || grads.size() != m.size())
    throw consistency_error("optimizer state does not match parameter list");
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g.cwiseProduct(g);
    Matrix m_hat = m[i] / bc1;
    Matrix v_hat = v[i] / bc2;
    p.array() -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps) + weight_decay * p.array());
  }
}

}  // namespace ldg
