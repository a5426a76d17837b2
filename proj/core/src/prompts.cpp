#include "ldg/prompts.hpp"

#include <cmath>
#include <random>

namespace ldg {

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double mean, double std_dev,
                     std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> dist(mean, std_dev);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

void check_domain(int m, int M) {
  if (m < 0 || m >= M)
    throw argument_error("domain id " + std::to_string(m) + " out of range [0," +
                         std::to_string(M) + ")");
}

}  // namespace

PromptBank PromptBank::make(PromptParam mode, int s, int d, int M, std::uint64_t seed) {
  if (s < 1 || d < 1 || M < 1)
    throw argument_error("prompt bank needs s, d, M >= 1");
  PromptBank bank;
  bank.mode = mode;
  bank.s = s;
  bank.d = d;
  bank.M = M;
  std::mt19937_64 rng(seed);
  if (mode == PromptParam::generator) {
    bank.shared = normal_matrix(s, d, 0.0, 0.02, rng);
    bank.u.reserve(M);
    bank.v.reserve(M);
    // factors start near one so P^m begins as a perturbed copy of the
    // shared prompt; zero-mean factors would starve the Hadamard product
    // of gradient early on
    for (int m = 0; m < M; ++m) {
      bank.u.push_back(normal_matrix(s, 1, 1.0, 0.5, rng));
      bank.v.push_back(normal_matrix(d, 1, 1.0, 0.5, rng));
    }
  } else {
    bank.direct.reserve(M);
    for (int m = 0; m < M; ++m) bank.direct.push_back(normal_matrix(s, d, 0.0, 0.02, rng));
  }
  return bank;
}

PromptBank PromptBank::zeros_like(const PromptBank& other) {
  PromptBank bank = other;
  for (Matrix* t : bank.tensors()) t->setZero();
  return bank;
}

std::vector<Matrix*> PromptBank::tensors() {
  std::vector<Matrix*> out;
  if (mode == PromptParam::generator) {
    out.push_back(&shared);
    for (auto& m : u) out.push_back(&m);
    for (auto& m : v) out.push_back(&m);
  } else {
    for (auto& m : direct) out.push_back(&m);
  }
  return out;
}

std::vector<const Matrix*> PromptBank::tensors() const {
  auto mut = const_cast<PromptBank*>(this)->tensors();
  return std::vector<const Matrix*>(mut.begin(), mut.end());
}

void PromptBank::accumulate_prompt_grad(int m, const Matrix& d_prompt,
                                        PromptBank& grads) const {
  check_domain(m, M);
  if (d_prompt.rows() != s || d_prompt.cols() != d)
    throw argument_error("prompt gradient shape mismatch");
  if (mode == PromptParam::independent) {
    grads.direct[m] += d_prompt;
    return;
  }
  const auto& um = u[m];
  const auto& vm = v[m];
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < d; ++j) {
      double g = d_prompt(i, j);
      grads.shared(i, j) += g * um(i, 0) * vm(j, 0);
      grads.u[m](i, 0) += g * shared(i, j) * vm(j, 0);
      grads.v[m](j, 0) += g * shared(i, j) * um(i, 0);
    }
  }
}

Matrix generate_prompt(const PromptBank& bank, int m) {
  check_domain(m, bank.M);
  if (bank.mode == PromptParam::independent) return bank.direct[m];
  Matrix p(bank.s, bank.d);
  for (int i = 0; i < bank.s; ++i)
    for (int j = 0; j < bank.d; ++j)
      p(i, j) = bank.shared(i, j) * bank.u[m](i, 0) * bank.v[m](j, 0);
  return p;
}

void validate_prompt_weights(const Vector& w, int M, double tol) {
  if (w.size() != M)
    throw argument_error("prompt weights length " + std::to_string(w.size()) +
                         " does not match domain count " + std::to_string(M));
  if (w.minCoeff() < -tol)
    throw argument_error("prompt weights contain a negative entry");
  double sum = w.sum();
  if (std::abs(sum - 1.0) > tol)
    throw argument_error("prompt weights sum to " + std::to_string(sum) +
                         ", expected 1 within " + std::to_string(tol));
}

Matrix weighted_prompt(const PromptBank& bank, const Vector& w) {
  validate_prompt_weights(w, bank.M);
  Matrix out = Matrix::Zero(bank.s, bank.d);
  bool first = true;
  for (int m = 0; m < bank.M; ++m) {
    if (w(m) == 0.0) continue;
    Matrix pm = generate_prompt(bank, m);
    if (first && w(m) == 1.0) return pm;
    if (first) {
      out = w(m) * pm;
      first = false;
    } else {
      out += w(m) * pm;
    }
  }
  return out;
}

Adapter Adapter::make(int d, int hidden, int M, std::uint64_t seed) {
  if (d < 1 || hidden < 1 || M < 1) throw argument_error("adapter needs d, hidden, M >= 1");
  Adapter a;
  a.d = d;
  a.hidden = hidden;
  a.M = M;
  std::mt19937_64 rng(seed);
  a.w1 = normal_matrix(d, hidden, 0.0, 0.02, rng);
  a.b1 = Matrix::Zero(1, hidden);
  a.w2 = Matrix::Zero(hidden, M);
  a.b2 = Matrix::Zero(1, M);
  return a;
}

Adapter Adapter::zeros_like(const Adapter& other) {
  Adapter a = other;
  for (Matrix* t : a.tensors()) t->setZero();
  return a;
}

std::vector<Matrix*> Adapter::tensors() { return {&w1, &b1, &w2, &b2}; }

std::vector<const Matrix*> Adapter::tensors() const {
  auto mut = const_cast<Adapter*>(this)->tensors();
  return std::vector<const Matrix*>(mut.begin(), mut.end());
}

Vector adapter_weights_row(const Adapter& adapter, const RowVector& cls_feature,
                           AdapterCache* cache) {
  if (cls_feature.size() != adapter.d)
    throw argument_error("adapter input width " + std::to_string(cls_feature.size()) +
                         " does not match d " + std::to_string(adapter.d));
  RowVector h_pre = cls_feature * adapter.w1 + adapter.b1.row(0);
  RowVector h = h_pre.cwiseMax(0.0);
  RowVector logits = h * adapter.w2 + adapter.b2.row(0);
  double mx = logits.maxCoeff();
  Vector w = (logits.array() - mx).exp().transpose();
  w /= w.sum();
  if (cache) {
    cache->input = cls_feature;
    cache->h_pre = h_pre;
    cache->w = w;
  }
  return w;
}

Matrix adapter_weights(const Adapter& adapter, const Matrix& cls_features) {
  Matrix out(cls_features.rows(), adapter.M);
  for (Eigen::Index r = 0; r < cls_features.rows(); ++r)
    out.row(r) = adapter_weights_row(adapter, cls_features.row(r)).transpose();
  return out;
}

void adapter_backward_row(const Adapter& adapter, const AdapterCache& cache,
                          const Vector& dw, Adapter& grads) {
  // softmax backward
  double dot = dw.dot(cache.w);
  Vector d_logits = cache.w.cwiseProduct(dw.array().matrix() - Vector::Constant(adapter.M, dot));
  RowVector h = cache.h_pre.cwiseMax(0.0);
  grads.w2 += h.transpose() * d_logits.transpose();
  grads.b2 += d_logits.transpose();
  RowVector d_h = (adapter.w2 * d_logits).transpose();
  RowVector d_h_pre =
      d_h.cwiseProduct(cache.h_pre.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; }));
  grads.w1 += cache.input.transpose() * d_h_pre;
  grads.b1 += d_h_pre;
}

}  // namespace ldg
