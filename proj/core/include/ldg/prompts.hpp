#pragma once

#include <cstdint>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

// How the M domain prompts are parameterized. `generator` couples them
// through a shared prompt and per-domain rank-one factors; `independent`
// gives every domain its own free s x d matrix (the generator toggle off).
enum class PromptParam { generator, independent };

struct PromptBank {
  PromptParam mode = PromptParam::generator;
  int s = 0;  // prompt length (token rows)
  int d = 0;  // embedding width
  int M = 0;  // domain count

  // generator mode: P^m = shared ⊙ (u_m v_m^T)
  Matrix shared;           // s x d
  std::vector<Matrix> u;   // M entries, s x 1
  std::vector<Matrix> v;   // M entries, d x 1

  // independent mode
  std::vector<Matrix> direct;  // M entries, s x d

  static PromptBank make(PromptParam mode, int s, int d, int M, std::uint64_t seed);
  static PromptBank zeros_like(const PromptBank& other);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;

  // Accumulates the gradient of a loss wrt prompt m's rows into the
  // parameter gradients. In generator mode only shared/u_m/v_m receive
  // anything; factors of other domains are untouched.
  void accumulate_prompt_grad(int m, const Matrix& d_prompt, PromptBank& grads) const;
};

// P^m[i,j] = shared[i,j] * u_m[i] * v_m[j] (or the direct matrix).
Matrix generate_prompt(const PromptBank& bank, int m);

// Throws argument_error when w is more than `tol` off the M-simplex.
void validate_prompt_weights(const Vector& w, int M, double tol = 1e-5);

// Convex combination sum_m w[m] * P^m over freshly generated prompts.
// Zero weights are skipped so a one-hot w reproduces generate_prompt bitwise.
Matrix weighted_prompt(const PromptBank& bank, const Vector& w);

// Two affine layers with a rectifier between, softmax over M outputs.
struct Adapter {
  int d = 0, hidden = 0, M = 0;
  Matrix w1;  // d x hidden
  Matrix b1;  // 1 x hidden
  Matrix w2;  // hidden x M
  Matrix b2;  // 1 x M

  // Final layer starts at zero: the initial weights are exactly uniform.
  static Adapter make(int d, int hidden, int M, std::uint64_t seed);
  static Adapter zeros_like(const Adapter& other);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

struct AdapterCache {
  RowVector input;
  RowVector h_pre;  // pre-activation hidden row
  Vector w;         // softmax output, length M
};

Vector adapter_weights_row(const Adapter& adapter, const RowVector& cls_feature,
                           AdapterCache* cache = nullptr);

// Rows of cls_features map to rows of the returned B x M weight matrix;
// every row lies on the simplex.
Matrix adapter_weights(const Adapter& adapter, const Matrix& cls_features);

// dw is the gradient wrt the softmax output. Input gradients are not
// produced: the adapter input is always a detached feature.
void adapter_backward_row(const Adapter& adapter, const AdapterCache& cache,
                          const Vector& dw, Adapter& grads);

}  // namespace ldg
