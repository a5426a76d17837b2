#include "ldg/backbone.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "ldg/rng.hpp"

namespace ldg {

namespace {

constexpr double kLnEps = 1e-6;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

std::atomic<int> g_threads{0};

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return phi + x * pdf;
}

void layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                        LayerNormCache& cache, Matrix& out) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.xhat.resize(n, d);
  cache.rstd.resize(n);
  out.resize(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().mean();
    double rstd = 1.0 / std::sqrt(var + kLnEps);
    cache.rstd(r) = rstd;
    cache.xhat.row(r) = (x.row(r).array() - mean) * rstd;
    out.row(r) = cache.xhat.row(r).cwiseProduct(gamma.row(0)) + beta.row(0);
  }
}

// Returns dx; accumulates gamma/beta grads.
Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& gamma,
                           const Matrix& dout, Matrix& g_gamma, Matrix& g_beta) {
  using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
  const Eigen::Index n = dout.rows(), d = dout.cols();
  Matrix dx(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    RowArray dy = dout.row(r).array();
    RowArray xh = cache.xhat.row(r).array();
    g_gamma.row(0).array() += dy * xh;
    g_beta.row(0).array() += dy;
    RowArray dxhat = dy * gamma.row(0).array();
    double m1 = dxhat.mean();
    double m2 = (dxhat * xh).mean();
    dx.row(r) = (cache.rstd(r) * (dxhat - m1 - xh * m2)).matrix();
  }
  return dx;
}

void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  Matrix mask(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double scale = 1.0 / (1.0 - p);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      mask(r, c) = u(rng) < p ? 0.0 : scale;
  return mask;
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double std_dev,
                     std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, std_dev);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0)
    throw config_error("image_size and patch_size must be positive");
  if (image_size % patch_size != 0)
    throw config_error("image_size (" + std::to_string(image_size) +
                       ") not divisible by patch_size (" + std::to_string(patch_size) + ")");
  if (embed_dim <= 0 || num_heads <= 0)
    throw config_error("embed_dim and num_heads must be positive");
  if (embed_dim % num_heads != 0)
    throw config_error("embed_dim (" + std::to_string(embed_dim) +
                       ") not divisible by num_heads (" + std::to_string(num_heads) + ")");
  if (depth < 1) throw config_error("depth (" + std::to_string(depth) + ") must be >= 1");
  if (num_classes < 2)
    throw config_error("num_classes (" + std::to_string(num_classes) + ") must be >= 2");
  if (drop_rate < 0.0 || drop_rate >= 1.0)
    throw config_error("drop_rate (" + std::to_string(drop_rate) + ") must lie in [0,1)");
}

EncoderConfig EncoderConfig::desk() {
  EncoderConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 4;
  cfg.embed_dim = 128;
  cfg.depth = 6;
  cfg.num_heads = 4;
  return cfg;
}

EncoderConfig EncoderConfig::vitb16() {
  EncoderConfig cfg;
  cfg.image_size = 224;
  cfg.patch_size = 16;
  cfg.embed_dim = 768;
  cfg.depth = 12;
  cfg.num_heads = 12;
  return cfg;
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  const int d = cfg.embed_dim, h = cfg.mlp_hidden(), c = cfg.num_classes;
  EncoderParams p;
  p.patch_embed_w = Matrix::Zero(cfg.patch_dim(), d);
  p.patch_embed_b = Matrix::Zero(1, d);
  p.pos_embed = Matrix::Zero(cfg.num_patches(), d);
  p.cls_token = Matrix::Zero(1, d);
  p.blocks.resize(cfg.depth);
  for (auto& b : p.blocks) {
    b.ln1_gamma = Matrix::Zero(1, d);
    b.ln1_beta = Matrix::Zero(1, d);
    b.wq = Matrix::Zero(d, d);
    b.wk = Matrix::Zero(d, d);
    b.wv = Matrix::Zero(d, d);
    b.wo = Matrix::Zero(d, d);
    b.bq = Matrix::Zero(1, d);
    b.bk = Matrix::Zero(1, d);
    b.bv = Matrix::Zero(1, d);
    b.bo = Matrix::Zero(1, d);
    b.ln2_gamma = Matrix::Zero(1, d);
    b.ln2_beta = Matrix::Zero(1, d);
    b.fc1_w = Matrix::Zero(d, h);
    b.fc1_b = Matrix::Zero(1, h);
    b.fc2_w = Matrix::Zero(h, d);
    b.fc2_b = Matrix::Zero(1, d);
  }
  p.ln_f_gamma = Matrix::Zero(1, d);
  p.ln_f_beta = Matrix::Zero(1, d);
  p.head_w = Matrix::Zero(d, c);
  p.head_b = Matrix::Zero(1, c);
  return p;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  EncoderParams p = zeros(cfg);
  std::mt19937_64 rng(seed);
  const double std_dev = 0.02;
  p.patch_embed_w = normal_matrix(p.patch_embed_w.rows(), p.patch_embed_w.cols(), std_dev, rng);
  p.pos_embed = normal_matrix(p.pos_embed.rows(), p.pos_embed.cols(), std_dev, rng);
  p.cls_token = normal_matrix(1, cfg.embed_dim, std_dev, rng);
  for (auto& b : p.blocks) {
    b.ln1_gamma.setOnes();
    b.ln2_gamma.setOnes();
    b.wq = normal_matrix(b.wq.rows(), b.wq.cols(), std_dev, rng);
    b.wk = normal_matrix(b.wk.rows(), b.wk.cols(), std_dev, rng);
    b.wv = normal_matrix(b.wv.rows(), b.wv.cols(), std_dev, rng);
    b.wo = normal_matrix(b.wo.rows(), b.wo.cols(), std_dev, rng);
    b.fc1_w = normal_matrix(b.fc1_w.rows(), b.fc1_w.cols(), std_dev, rng);
    b.fc2_w = normal_matrix(b.fc2_w.rows(), b.fc2_w.cols(), std_dev, rng);
  }
  p.ln_f_gamma.setOnes();
  p.head_w = normal_matrix(p.head_w.rows(), p.head_w.cols(), std_dev, rng);
  return p;
}

std::vector<Matrix*> EncoderParams::tensors() {
  std::vector<Matrix*> out = {&patch_embed_w, &patch_embed_b, &pos_embed, &cls_token};
  for (auto& b : blocks) {
    out.insert(out.end(), {&b.ln1_gamma, &b.ln1_beta, &b.wq, &b.bq, &b.wk, &b.bk, &b.wv,
                           &b.bv, &b.wo, &b.bo, &b.ln2_gamma, &b.ln2_beta, &b.fc1_w,
                           &b.fc1_b, &b.fc2_w, &b.fc2_b});
  }
  out.insert(out.end(), {&ln_f_gamma, &ln_f_beta, &head_w, &head_b});
  return out;
}

std::vector<const Matrix*> EncoderParams::tensors() const {
  auto mut = const_cast<EncoderParams*>(this)->tensors();
  return std::vector<const Matrix*>(mut.begin(), mut.end());
}

void EncoderParams::for_each_named(const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("patch_embed_w", patch_embed_w);
  fn("patch_embed_b", patch_embed_b);
  fn("pos_embed", pos_embed);
  fn("cls_token", cls_token);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& b = blocks[i];
    const std::string pre = "block" + std::to_string(i) + ".";
    fn(pre + "ln1_gamma", b.ln1_gamma);
    fn(pre + "ln1_beta", b.ln1_beta);
    fn(pre + "wq", b.wq);
    fn(pre + "bq", b.bq);
    fn(pre + "wk", b.wk);
    fn(pre + "bk", b.bk);
    fn(pre + "wv", b.wv);
    fn(pre + "bv", b.bv);
    fn(pre + "wo", b.wo);
    fn(pre + "bo", b.bo);
    fn(pre + "ln2_gamma", b.ln2_gamma);
    fn(pre + "ln2_beta", b.ln2_beta);
    fn(pre + "fc1_w", b.fc1_w);
    fn(pre + "fc1_b", b.fc1_b);
    fn(pre + "fc2_w", b.fc2_w);
    fn(pre + "fc2_b", b.fc2_b);
  }
  fn("ln_f_gamma", ln_f_gamma);
  fn("ln_f_beta", ln_f_beta);
  fn("head_w", head_w);
  fn("head_b", head_b);
}

Matrix extract_patches(const EncoderConfig& cfg, const Image& img) {
  if (img.height != cfg.image_size || img.width != cfg.image_size)
    throw config_error("image shape " + std::to_string(img.height) + "x" +
                       std::to_string(img.width) + " does not match configured image_size " +
                       std::to_string(cfg.image_size));
  const int ps = cfg.patch_size, g = cfg.grid();
  Matrix patches(cfg.num_patches(), cfg.patch_dim());
  for (int py = 0; py < g; ++py)
    for (int px = 0; px < g; ++px) {
      int row = py * g + px;
      int idx = 0;
      for (int y = 0; y < ps; ++y)
        for (int x = 0; x < ps; ++x)
          for (int c = 0; c < 3; ++c)
            patches(row, idx++) = img.at(py * ps + y, px * ps + x, c);
    }
  return patches;
}

void encoder_forward(const EncoderConfig& cfg, const EncoderParams& params,
                     const Image& img, const Matrix& prompt, bool train_mode,
                     std::mt19937_64* dropout_rng, ForwardCache& cache) {
  const int d = cfg.embed_dim;
  if (prompt.size() > 0 && prompt.cols() != d)
    throw argument_error("prompt width " + std::to_string(prompt.cols()) +
                         " does not match embed_dim " + std::to_string(d));
  const int s = static_cast<int>(prompt.rows());
  const int p = cfg.num_patches();
  const int n = 1 + s + p;
  const bool dropout = train_mode && cfg.drop_rate > 0.0;
  if (dropout && dropout_rng == nullptr)
    throw argument_error("train-mode forward with drop_rate > 0 requires an rng");

  cache.prompt_len = s;
  cache.patches = extract_patches(cfg, img);

  Matrix tokens(n, d);
  tokens.row(0) = params.cls_token.row(0);
  if (s > 0) tokens.middleRows(1, s) = prompt;
  tokens.bottomRows(p) = (cache.patches * params.patch_embed_w).rowwise() +
                         params.patch_embed_b.row(0);
  tokens.bottomRows(p) += params.pos_embed;

  if (dropout) {
    cache.drop_embed = dropout_mask(n, d, cfg.drop_rate, *dropout_rng);
    tokens = tokens.cwiseProduct(cache.drop_embed);
  } else {
    cache.drop_embed.resize(0, 0);
  }
  cache.tokens0 = tokens;

  const int nh = cfg.num_heads, dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  cache.blocks.resize(cfg.depth);

  Matrix x = cache.tokens0;
  for (int b = 0; b < cfg.depth; ++b) {
    auto& bc = cache.blocks[b];
    const auto& bp = params.blocks[b];
    bc.x_in = x;
    layer_norm_forward(bc.x_in, bp.ln1_gamma, bp.ln1_beta, bc.ln1, bc.ln1_out);
    bc.q = (bc.ln1_out * bp.wq).rowwise() + bp.bq.row(0);
    bc.k = (bc.ln1_out * bp.wk).rowwise() + bp.bk.row(0);
    bc.v = (bc.ln1_out * bp.wv).rowwise() + bp.bv.row(0);
    bc.attn.resize(nh);
    bc.attn_concat.resize(n, d);
    for (int h = 0; h < nh; ++h) {
      auto qh = bc.q.middleCols(h * dh, dh);
      auto kh = bc.k.middleCols(h * dh, dh);
      auto vh = bc.v.middleCols(h * dh, dh);
      Matrix scores = qh * kh.transpose() * scale;
      softmax_rows_inplace(scores);
      bc.attn[h] = std::move(scores);
      bc.attn_concat.middleCols(h * dh, dh) = bc.attn[h] * vh;
    }
    Matrix attn_proj = (bc.attn_concat * bp.wo).rowwise() + bp.bo.row(0);
    if (dropout) {
      bc.drop_attn = dropout_mask(n, d, cfg.drop_rate, *dropout_rng);
      attn_proj = attn_proj.cwiseProduct(bc.drop_attn);
    }
    bc.x_mid = bc.x_in + attn_proj;

    layer_norm_forward(bc.x_mid, bp.ln2_gamma, bp.ln2_beta, bc.ln2, bc.ln2_out);
    bc.fc1_pre = (bc.ln2_out * bp.fc1_w).rowwise() + bp.fc1_b.row(0);
    bc.gelu_out = bc.fc1_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix mlp_out = (bc.gelu_out * bp.fc2_w).rowwise() + bp.fc2_b.row(0);
    if (dropout) {
      bc.drop_mlp = dropout_mask(n, d, cfg.drop_rate, *dropout_rng);
      mlp_out = mlp_out.cwiseProduct(bc.drop_mlp);
    }
    x = bc.x_mid + mlp_out;
  }
  cache.x_last = x;

  Matrix x_norm;
  layer_norm_forward(cache.x_last, params.ln_f_gamma, params.ln_f_beta, cache.lnf, x_norm);
  cache.cls = x_norm.row(0);
  cache.logits = (cache.cls * params.head_w).transpose() + params.head_b.row(0).transpose();
}

Matrix encoder_backward(const EncoderConfig& cfg, const EncoderParams& params,
                        const ForwardCache& cache, const Vector& dlogits,
                        EncoderParams& grads) {
  const int d = cfg.embed_dim;
  const int s = cache.prompt_len;
  const int p = cfg.num_patches();
  const int n = 1 + s + p;
  const int nh = cfg.num_heads, dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  grads.head_w += cache.cls.transpose() * dlogits.transpose();
  grads.head_b += dlogits.transpose();
  RowVector d_cls = (params.head_w * dlogits).transpose();

  Matrix d_norm = Matrix::Zero(n, d);
  d_norm.row(0) = d_cls;
  Matrix dx = layer_norm_backward(cache.lnf, params.ln_f_gamma, d_norm,
                                  grads.ln_f_gamma, grads.ln_f_beta);

  for (int b = cfg.depth - 1; b >= 0; --b) {
    const auto& bc = cache.blocks[b];
    const auto& bp = params.blocks[b];
    auto& bg = grads.blocks[b];

    // mlp branch
    Matrix d_mlp_out = bc.drop_mlp.size() > 0 ? dx.cwiseProduct(bc.drop_mlp) : dx;
    bg.fc2_w += bc.gelu_out.transpose() * d_mlp_out;
    bg.fc2_b += d_mlp_out.colwise().sum();
    Matrix d_gelu = d_mlp_out * bp.fc2_w.transpose();
    Matrix d_fc1 = d_gelu.cwiseProduct(
        bc.fc1_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    bg.fc1_w += bc.ln2_out.transpose() * d_fc1;
    bg.fc1_b += d_fc1.colwise().sum();
    Matrix d_ln2_out = d_fc1 * bp.fc1_w.transpose();
    Matrix d_x_mid =
        dx + layer_norm_backward(bc.ln2, bp.ln2_gamma, d_ln2_out, bg.ln2_gamma, bg.ln2_beta);

    // attention branch
    Matrix d_attn_proj =
        bc.drop_attn.size() > 0 ? d_x_mid.cwiseProduct(bc.drop_attn) : d_x_mid;
    bg.wo += bc.attn_concat.transpose() * d_attn_proj;
    bg.bo += d_attn_proj.colwise().sum();
    Matrix d_concat = d_attn_proj * bp.wo.transpose();

    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (int h = 0; h < nh; ++h) {
      auto kh = bc.k.middleCols(h * dh, dh);
      auto qh = bc.q.middleCols(h * dh, dh);
      auto vh = bc.v.middleCols(h * dh, dh);
      const Matrix& a = bc.attn[h];
      Matrix d_oh = d_concat.middleCols(h * dh, dh);
      Matrix d_a = d_oh * vh.transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * d_oh;
      // softmax rows backward
      Matrix d_scores(n, n);
      for (int r = 0; r < n; ++r) {
        double dot = d_a.row(r).dot(a.row(r));
        d_scores.row(r) = a.row(r).cwiseProduct(d_a.row(r).array().matrix() -
                                                RowVector::Constant(n, dot));
      }
      dq.middleCols(h * dh, dh) = d_scores * kh * scale;
      dk.middleCols(h * dh, dh) = d_scores.transpose() * qh * scale;
    }
    bg.wq += bc.ln1_out.transpose() * dq;
    bg.bq += dq.colwise().sum();
    bg.wk += bc.ln1_out.transpose() * dk;
    bg.bk += dk.colwise().sum();
    bg.wv += bc.ln1_out.transpose() * dv;
    bg.bv += dv.colwise().sum();
    Matrix d_ln1_out = dq * bp.wq.transpose() + dk * bp.wk.transpose() + dv * bp.wv.transpose();
    dx = d_x_mid +
         layer_norm_backward(bc.ln1, bp.ln1_gamma, d_ln1_out, bg.ln1_gamma, bg.ln1_beta);
  }

  if (cache.drop_embed.size() > 0) dx = dx.cwiseProduct(cache.drop_embed);

  grads.cls_token += dx.row(0);
  Matrix d_prompt = s > 0 ? Matrix(dx.middleRows(1, s)) : Matrix(0, d);
  auto d_patch_tokens = dx.bottomRows(p);
  grads.pos_embed += d_patch_tokens;
  grads.patch_embed_w += cache.patches.transpose() * d_patch_tokens;
  grads.patch_embed_b += d_patch_tokens.colwise().sum();
  return d_prompt;
}

RowVector encoder_extract_cls(const EncoderConfig& cfg, const EncoderParams& params,
                              const Image& img, int layer) {
  if (layer < 1 || layer > cfg.depth)
    throw argument_error("layer " + std::to_string(layer) + " out of range [1," +
                         std::to_string(cfg.depth) + "]");
  const int d = cfg.embed_dim;
  const int p = cfg.num_patches();
  const int n = 1 + p;
  const int nh = cfg.num_heads, dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix patches = extract_patches(cfg, img);
  Matrix x(n, d);
  x.row(0) = params.cls_token.row(0);
  x.bottomRows(p) =
      ((patches * params.patch_embed_w).rowwise() + params.patch_embed_b.row(0)) +
      params.pos_embed;

  LayerNormCache ln;
  Matrix normed, scores;
  for (int b = 0; b < layer; ++b) {
    const auto& bp = params.blocks[b];
    layer_norm_forward(x, bp.ln1_gamma, bp.ln1_beta, ln, normed);
    Matrix q = (normed * bp.wq).rowwise() + bp.bq.row(0);
    Matrix k = (normed * bp.wk).rowwise() + bp.bk.row(0);
    Matrix v = (normed * bp.wv).rowwise() + bp.bv.row(0);
    Matrix concat(n, d);
    for (int h = 0; h < nh; ++h) {
      scores = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows_inplace(scores);
      concat.middleCols(h * dh, dh) = scores * v.middleCols(h * dh, dh);
    }
    x += ((concat * bp.wo).rowwise() + bp.bo.row(0)).eval();
    layer_norm_forward(x, bp.ln2_gamma, bp.ln2_beta, ln, normed);
    Matrix h1 = ((normed * bp.fc1_w).rowwise() + bp.fc1_b.row(0))
                    .unaryExpr([](double v_) { return gelu(v_); });
    x += ((h1 * bp.fc2_w).rowwise() + bp.fc2_b.row(0)).eval();
  }
  if (layer == cfg.depth) {
    layer_norm_forward(x, params.ln_f_gamma, params.ln_f_beta, ln, normed);
    return normed.row(0);
  }
  return x.row(0);
}

void set_thread_count(int n) { g_threads.store(n); }

int thread_count() {
  int n = g_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_chunks(std::size_t n, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  chunks = std::min(chunks, n);
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), chunks);
  auto chunk_range = [&](std::size_t c) {
    std::size_t lo = n * c / chunks;
    std::size_t hi = n * (c + 1) / chunks;
    return std::pair<std::size_t, std::size_t>(lo, hi);
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [lo, hi] = chunk_range(c);
      fn(c, lo, hi);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t c = next.fetch_add(1);
        if (c >= chunks) return;
        auto [lo, hi] = chunk_range(c);
        try {
          fn(c, lo, hi);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

BatchOutput forward_batch(const EncoderConfig& cfg, const EncoderParams& params,
                          const std::vector<const Image*>& images, const Matrix& prompt) {
  if (images.empty()) throw argument_error("forward requires a non-empty batch");
  const std::size_t b = images.size();
  BatchOutput out;
  out.cls.resize(b, cfg.embed_dim);
  out.logits.resize(b, cfg.num_classes);
  parallel_chunks(b, kGradChunks, [&](std::size_t, std::size_t lo, std::size_t hi) {
    ForwardCache cache;
    for (std::size_t i = lo; i < hi; ++i) {
      encoder_forward(cfg, params, *images[i], prompt, /*train_mode=*/false, nullptr, cache);
      out.cls.row(i) = cache.cls;
      out.logits.row(i) = cache.logits.transpose();
    }
  });
  return out;
}

}  // namespace

BatchOutput forward_plain(const EncoderConfig& cfg, const EncoderParams& params,
                          const std::vector<const Image*>& images) {
  return forward_batch(cfg, params, images, Matrix(0, cfg.embed_dim));
}

BatchOutput forward_prompted(const EncoderConfig& cfg, const EncoderParams& params,
                             const std::vector<const Image*>& images, const Matrix& prompt) {
  return forward_batch(cfg, params, images, prompt);
}

Matrix extract_cls(const EncoderConfig& cfg, const EncoderParams& params,
                   const std::vector<const Image*>& images, int layer) {
  if (images.empty()) throw argument_error("extract_cls requires a non-empty batch");
  Matrix out(images.size(), cfg.embed_dim);
  parallel_chunks(images.size(), kGradChunks, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      out.row(i) = encoder_extract_cls(cfg, params, *images[i], layer);
  });
  return out;
}

std::vector<const Image*> image_pointers(const Dataset& ds) {
  std::vector<const Image*> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(&s.image);
  return out;
}

}  // namespace ldg
