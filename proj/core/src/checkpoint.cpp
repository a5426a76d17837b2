#include "ldg/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ldg {

namespace {

constexpr char kMagic[8] = {'L', 'D', 'G', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw data_error("checkpoint truncated");
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
}

Matrix read_matrix(std::istream& in) {
  auto rows = read_pod<std::uint64_t>(in);
  auto cols = read_pod<std::uint64_t>(in);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in);
  return m;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  auto len = read_pod<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw data_error("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, ckpt.version);
  write_pod<std::uint64_t>(out, ckpt.seed);

  const auto& cfg = ckpt.model.cfg;
  write_pod<std::int32_t>(out, cfg.image_size);
  write_pod<std::int32_t>(out, cfg.patch_size);
  write_pod<std::int32_t>(out, cfg.embed_dim);
  write_pod<std::int32_t>(out, cfg.depth);
  write_pod<std::int32_t>(out, cfg.num_heads);
  write_pod<std::int32_t>(out, cfg.num_classes);
  write_pod<double>(out, cfg.drop_rate);

  write_pod<std::uint8_t>(out, ckpt.toggles.P);
  write_pod<std::uint8_t>(out, ckpt.toggles.A);
  write_pod<std::uint8_t>(out, ckpt.toggles.M);
  write_pod<std::uint8_t>(out, ckpt.toggles.G);
  write_pod<std::int32_t>(out, ckpt.prompt_len);
  write_pod<std::int32_t>(out, ckpt.num_domains);
  write_pod<std::int32_t>(out, ckpt.selected_epoch);
  write_pod<double>(out, ckpt.selected_metric);

  auto tensors = ckpt.model.tensors();
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(tensors.size()));
  for (const Matrix* t : tensors) write_matrix(out, *t);

  write_pod<std::uint8_t>(out, ckpt.assignment.has_value() ? 1 : 0);
  if (ckpt.assignment) {
    const auto& a = *ckpt.assignment;
    write_pod<std::int32_t>(out, a.M);
    write_pod<std::int32_t>(out, a.layer);
    write_pod<std::int32_t>(out, a.epoch);
    write_matrix(out, a.centroids);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(a.assignment.size()));
    for (const auto& [id, dom] : a.assignment) {
      write_string(out, id);
      write_pod<std::int32_t>(out, dom);
    }
  }
  if (!out) throw data_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw data_error("not a checkpoint file (bad magic): " + path);

  Checkpoint ckpt;
  ckpt.version = read_pod<std::uint32_t>(in);
  if (ckpt.version != 1)
    throw data_error("unsupported checkpoint version " + std::to_string(ckpt.version));
  ckpt.seed = read_pod<std::uint64_t>(in);

  EncoderConfig cfg;
  cfg.image_size = read_pod<std::int32_t>(in);
  cfg.patch_size = read_pod<std::int32_t>(in);
  cfg.embed_dim = read_pod<std::int32_t>(in);
  cfg.depth = read_pod<std::int32_t>(in);
  cfg.num_heads = read_pod<std::int32_t>(in);
  cfg.num_classes = read_pod<std::int32_t>(in);
  cfg.drop_rate = read_pod<double>(in);

  ckpt.toggles.P = read_pod<std::uint8_t>(in) != 0;
  ckpt.toggles.A = read_pod<std::uint8_t>(in) != 0;
  ckpt.toggles.M = read_pod<std::uint8_t>(in) != 0;
  ckpt.toggles.G = read_pod<std::uint8_t>(in) != 0;
  ckpt.prompt_len = read_pod<std::int32_t>(in);
  ckpt.num_domains = read_pod<std::int32_t>(in);
  ckpt.selected_epoch = read_pod<std::int32_t>(in);
  ckpt.selected_metric = read_pod<double>(in);

  ckpt.model = Model::build(cfg, ckpt.toggles, std::max(1, ckpt.prompt_len),
                            std::max(1, ckpt.num_domains), /*master_seed=*/0);
  auto tensors = ckpt.model.tensors();
  auto count = read_pod<std::uint64_t>(in);
  if (count != tensors.size())
    throw data_error("checkpoint/config mismatch: expected " +
                     std::to_string(tensors.size()) + " tensors, file has " +
                     std::to_string(count));
  for (Matrix* t : tensors) {
    Matrix m = read_matrix(in);
    if (m.rows() != t->rows() || m.cols() != t->cols())
      throw data_error("checkpoint tensor shape mismatch");
    *t = std::move(m);
  }

  if (read_pod<std::uint8_t>(in) != 0) {
    PseudoDomainAssignment a;
    a.M = read_pod<std::int32_t>(in);
    a.layer = read_pod<std::int32_t>(in);
    a.epoch = read_pod<std::int32_t>(in);
    a.centroids = read_matrix(in);
    auto n = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string id = read_string(in);
      a.assignment[id] = read_pod<std::int32_t>(in);
    }
    ckpt.assignment = std::move(a);
  }
  return ckpt;
}

}  // namespace ldg
