#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ldg/common.hpp"
#include "ldg/data.hpp"

namespace ldg {

struct EncoderConfig {
  int image_size = 32;
  int patch_size = 4;
  int embed_dim = 128;
  int depth = 6;
  int num_heads = 4;
  int num_classes = 2;
  double drop_rate = 0.0;

  int grid() const { return image_size / patch_size; }
  int num_patches() const { return grid() * grid(); }
  int patch_dim() const { return patch_size * patch_size * 3; }
  int mlp_hidden() const { return 4 * embed_dim; }
  int head_dim() const { return embed_dim / num_heads; }

  void validate() const;  // throws config_error naming the offending dimension

  static EncoderConfig desk();    // 32px, patch 4, d 128, depth 6, heads 4
  static EncoderConfig vitb16();  // 224px, patch 16, d 768, depth 12, heads 12

  bool operator==(const EncoderConfig&) const = default;
};

struct BlockParams {
  Matrix ln1_gamma, ln1_beta;  // 1 x d
  Matrix wq, wk, wv, wo;       // d x d
  Matrix bq, bk, bv, bo;       // 1 x d
  Matrix ln2_gamma, ln2_beta;  // 1 x d
  Matrix fc1_w;                // d x hidden
  Matrix fc1_b;                // 1 x hidden
  Matrix fc2_w;                // hidden x d
  Matrix fc2_b;                // 1 x d
};

// All trainable encoder state. Gradient and optimizer buffers reuse this
// struct; tensors() walks the matrices in a fixed order so mirrored
// instances stay aligned.
struct EncoderParams {
  Matrix patch_embed_w;  // patch_dim x d
  Matrix patch_embed_b;  // 1 x d
  Matrix pos_embed;      // num_patches x d  (patch tokens only)
  Matrix cls_token;      // 1 x d
  std::vector<BlockParams> blocks;
  Matrix ln_f_gamma, ln_f_beta;  // 1 x d
  Matrix head_w;                 // d x num_classes
  Matrix head_b;                 // 1 x num_classes

  static EncoderParams zeros(const EncoderConfig& cfg);
  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  void for_each_named(const std::function<void(const std::string&, Matrix&)>& fn);
};

struct LayerNormCache {
  Matrix xhat;   // n x d normalized inputs
  Vector rstd;   // n
};

struct BlockCache {
  Matrix x_in;
  LayerNormCache ln1;
  Matrix ln1_out;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, n x n row-softmax probabilities
  Matrix attn_concat;        // n x d, heads re-interleaved
  Matrix drop_attn;          // dropout mask or empty
  Matrix x_mid;
  LayerNormCache ln2;
  Matrix ln2_out;
  Matrix fc1_pre;   // n x hidden
  Matrix gelu_out;  // n x hidden
  Matrix drop_mlp;  // dropout mask or empty
};

struct ForwardCache {
  Matrix patches;  // num_patches x patch_dim, raw pixel values
  Matrix drop_embed;
  Matrix tokens0;  // (1 + s + p) x d, block-1 input: [class, prompts, patches]
  std::vector<BlockCache> blocks;
  Matrix x_last;  // output of final block, pre final norm
  LayerNormCache lnf;
  RowVector cls;  // final class feature (post final norm)
  Vector logits;
  int prompt_len = 0;
};

// Flattens image patches in row-major grid order; each patch row-major (y,x,c).
Matrix extract_patches(const EncoderConfig& cfg, const Image& img);

// Single-sample forward. `prompt` may have zero rows; its rows sit between
// the class token and the patch tokens from block 1 onward. Dropout is only
// active when train_mode and cfg.drop_rate > 0 (rng then required).
void encoder_forward(const EncoderConfig& cfg, const EncoderParams& params,
                     const Image& img, const Matrix& prompt, bool train_mode,
                     std::mt19937_64* dropout_rng, ForwardCache& cache);

// Backpropagates dlogits through head and encoder, accumulating into
// `grads`. Returns the gradient with respect to the prompt rows (s x d;
// zero-sized when the forward had no prompt).
Matrix encoder_backward(const EncoderConfig& cfg, const EncoderParams& params,
                        const ForwardCache& cache, const Vector& dlogits,
                        EncoderParams& grads);

// Class token after block `layer` (1-based). layer == depth applies the
// final norm, so it equals the cls feature forward_plain reports.
RowVector encoder_extract_cls(const EncoderConfig& cfg, const EncoderParams& params,
                              const Image& img, int layer);

struct BatchOutput {
  Matrix cls;     // B x d
  Matrix logits;  // B x C
};

// Read-only, eval-mode batch entry points (safe to call concurrently
// between parameter updates; internally parallel over samples).
BatchOutput forward_plain(const EncoderConfig& cfg, const EncoderParams& params,
                          const std::vector<const Image*>& images);
BatchOutput forward_prompted(const EncoderConfig& cfg, const EncoderParams& params,
                             const std::vector<const Image*>& images, const Matrix& prompt);
Matrix extract_cls(const EncoderConfig& cfg, const EncoderParams& params,
                   const std::vector<const Image*>& images, int layer);

std::vector<const Image*> image_pointers(const Dataset& ds);

// Worker threads used for batch-parallel work. Results are independent of
// this value: accumulation happens over a fixed chunk grid.
void set_thread_count(int n);
int thread_count();

// Runs fn(chunk_index, begin, end) over a fixed partition of [0, n) into
// `chunks` ranges, in parallel. Chunk boundaries depend only on n and chunks.
void parallel_chunks(std::size_t n, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline constexpr std::size_t kGradChunks = 8;

}  // namespace ldg
