#include "ldg/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ldg/config.hpp"
#include "ldg/csv.hpp"
#include "ldg/png_io.hpp"
#include "ldg/rng.hpp"

namespace fs = std::filesystem;

namespace ldg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// --- artifact renderers -------------------------------------------------

void render_corner_patch(Image& img, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> corner_pick(0, 3);
  int corner = corner_pick(rng);
  double s = static_cast<double>(img.width);
  double radius = 0.42 * s;
  double cx = (corner % 2 == 0) ? 0.0 : s - 1.0;
  double cy = (corner / 2 == 0) ? 0.0 : s - 1.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= radius * radius)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) *= 0.25;
    }
}

void render_stripe_ruler(Image& img, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> orient_pick(0, 1);
  std::uniform_real_distribution<double> pos_pick(0.1, 0.7);
  bool horizontal = orient_pick(rng) == 0;
  int start = static_cast<int>(pos_pick(rng) * img.width);
  int band = std::max(3, img.width * 18 / 100);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      int along = horizontal ? y : x;
      int across = horizontal ? x : y;
      if (along >= start && along < start + band && across % 3 == 0)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp01(img.at(y, x, c) - 0.35);
    }
}

void render_color_tint(Image& img, std::mt19937_64&) {
  // one fixed warm tint so every tinted image shares the same style direction
  constexpr double kTint[3] = {0.95, 0.55, 0.35};
  constexpr double kAlpha = 0.30;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = clamp01((1.0 - kAlpha) * img.at(y, x, c) + kAlpha * kTint[c]);
}

void render_curve_hair(Image& img, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> strokes_pick(2, 3);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  int strokes = strokes_pick(rng);
  double s = static_cast<double>(img.width);
  for (int k = 0; k < strokes; ++k) {
    double x0 = coord(rng) * s, y0 = coord(rng) * s;
    double x1 = coord(rng) * s, y1 = coord(rng) * s;
    double xc = coord(rng) * s, yc = coord(rng) * s;
    for (int step = 0; step <= 120; ++step) {
      double t = step / 120.0;
      double a = (1 - t) * (1 - t), b = 2 * t * (1 - t), c2 = t * t;
      int px = static_cast<int>(a * x0 + b * xc + c2 * x1);
      int py = static_cast<int>(a * y0 + b * yc + c2 * y1);
      if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
      for (int c = 0; c < 3; ++c) img.at(py, px, c) = clamp01(img.at(py, px, c) - 0.45);
    }
  }
}

void render_artifact(Image& img, ArtifactKind kind, std::mt19937_64& rng) {
  switch (kind) {
    case ArtifactKind::corner_patch: render_corner_patch(img, rng); break;
    case ArtifactKind::stripe_ruler: render_stripe_ruler(img, rng); break;
    case ArtifactKind::color_tint: render_color_tint(img, rng); break;
    case ArtifactKind::curve_hair: render_curve_hair(img, rng); break;
  }
}

// --- class signal --------------------------------------------------------

// class 0: filled blob; class 1: ring; class 2: diagonal cross
void render_class_shape(Image& img, int class_label, std::mt19937_64& rng) {
  double s = static_cast<double>(img.width);
  std::uniform_real_distribution<double> jitter(-0.08, 0.08);
  std::uniform_real_distribution<double> radius_pick(0.20, 0.30);
  double cx = 0.5 * s + jitter(rng) * s;
  double cy = 0.5 * s + jitter(rng) * s;
  double r = radius_pick(rng) * s;
  const double delta = -0.28;

  auto shade = [&](int y, int x) {
    for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp01(img.at(y, x, c) + delta);
  };

  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double dx = x - cx, dy = y - cy;
      double dist = std::sqrt(dx * dx + dy * dy);
      switch (class_label) {
        case 0:
          if (dist <= r) shade(y, x);
          break;
        case 1:
          if (dist <= r && dist >= 0.55 * r) shade(y, x);
          break;
        case 2:
          if (dist <= r && (std::abs(dx - dy) < 1.6 || std::abs(dx + dy) < 1.6)) shade(y, x);
          break;
        default:
          break;
      }
    }
}

Image render_sample(int class_label, int artifact_label,
                    const std::vector<ArtifactKind>& kinds, int image_size,
                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> base_pick(0.35, 0.65);
  std::normal_distribution<double> noise(0.0, 0.03);
  double base = base_pick(rng);
  Image img(image_size, image_size);
  for (double& p : img.pixels) p = clamp01(base + noise(rng));
  render_class_shape(img, class_label, rng);
  if (artifact_label > 0) render_artifact(img, kinds[artifact_label - 1], rng);
  return img;
}

struct SplitPlan {
  std::vector<int> class_of;
  std::vector<int> artifact_of;  // 0 = none, 1+k = kind k
};

// Exact-count construction: per class, round(n_c * p(artifact|class)) samples
// carry an artifact. A probability strictly inside (0,1) must produce a
// non-empty cell on both sides, otherwise the spec is unsatisfiable.
SplitPlan plan_split(const TrapSpec& spec, int n, double rho_effective,
                     std::mt19937_64& rng) {
  SplitPlan plan;
  plan.class_of.resize(n);
  plan.artifact_of.assign(n, 0);
  const int C = spec.num_classes;
  for (int i = 0; i < n; ++i) plan.class_of[i] = i % C;

  const int K = static_cast<int>(spec.artifacts.size());
  if (spec.style_mode == StyleMode::uniform) {
    // round-robin kinds within each class: style stays independent of class
    for (int c = 0; c < C; ++c) {
      int j = 0;
      for (int i = 0; i < n; ++i)
        if (plan.class_of[i] == c) plan.artifact_of[i] = 1 + (j++ % K);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (plan.class_of[i] == c) members.push_back(i);
      double p = (c == C - 1) ? (1.0 + rho_effective) / 2.0 : (1.0 - rho_effective) / 2.0;
      int n_c = static_cast<int>(members.size());
      // nudge before rounding: p*n_c sitting exactly on .5 must not fall to
      // the empty side through floating-point representation
      int k_art = static_cast<int>(std::lround(p * n_c + 1e-9));
      if (p > 0.0 && p < 1.0 && (k_art == 0 || k_art == n_c))
        throw argument_error("trap spec unsatisfiable: rho " + std::to_string(spec.rho) +
                             " with " + std::to_string(n_c) + " samples of class " +
                             std::to_string(c) + " leaves an artifact cell empty");
      std::shuffle(members.begin(), members.end(), rng);
      for (int j = 0; j < k_art; ++j)
        plan.artifact_of[members[j]] = 1 + j % K;
    }
  }

  // interleave classes but shuffle within the split so dataset order carries
  // no signal
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  SplitPlan shuffled;
  shuffled.class_of.reserve(n);
  shuffled.artifact_of.reserve(n);
  for (int i : order) {
    shuffled.class_of.push_back(plan.class_of[i]);
    shuffled.artifact_of.push_back(plan.artifact_of[i]);
  }
  return shuffled;
}

Dataset build_split(const TrapSpec& spec, const std::string& split_name, int n,
                    double rho_effective, std::uint64_t split_stream) {
  auto rng = make_rng(spec.seed, Stream::data, split_stream);
  SplitPlan plan = plan_split(spec, n, rho_effective, rng);
  Dataset ds;
  ds.name = split_name;
  ds.samples.reserve(n);
  char id[64];
  for (int i = 0; i < n; ++i) {
    LabeledImage li;
    li.class_label = plan.class_of[i];
    li.artifact_label = plan.artifact_of[i];
    li.given_domain = plan.artifact_of[i];
    std::snprintf(id, sizeof(id), "%s_%05d", split_name.c_str(), i);
    li.sample_id = id;
    li.image = render_sample(plan.class_of[i], plan.artifact_of[i], spec.artifacts,
                             spec.image_size, rng);
    ds.samples.push_back(std::move(li));
  }
  return ds;
}

double bilinear_sample(const Image& img, double y, double x, int c) {
  double yc = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  double xc = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  int y0 = static_cast<int>(std::floor(yc));
  int x0 = static_cast<int>(std::floor(xc));
  int y1 = std::min(y0 + 1, img.height - 1);
  int x1 = std::min(x0 + 1, img.width - 1);
  double fy = yc - y0, fx = xc - x0;
  return (1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
         fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c));
}

}  // namespace

void Image::clamp01() {
  for (double& p : pixels) p = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

std::string to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::corner_patch: return "corner_patch";
    case ArtifactKind::stripe_ruler: return "stripe_ruler";
    case ArtifactKind::color_tint: return "color_tint";
    case ArtifactKind::curve_hair: return "curve_hair";
  }
  return "unknown";
}

ArtifactKind artifact_kind_from_string(const std::string& s) {
  if (s == "corner_patch") return ArtifactKind::corner_patch;
  if (s == "stripe_ruler") return ArtifactKind::stripe_ruler;
  if (s == "color_tint") return ArtifactKind::color_tint;
  if (s == "curve_hair") return ArtifactKind::curve_hair;
  throw argument_error("unknown artifact kind: " + s);
}

void TrapSpec::validate() const {
  if (rho < 0.0 || rho > 1.0)
    throw argument_error("rho " + std::to_string(rho) + " outside [0,1]");
  if (num_classes < 2 || num_classes > 3)
    throw argument_error("trap generator supports 2 or 3 classes");
  if (artifacts.empty()) throw argument_error("trap spec needs at least one artifact");
  if (image_size < 16) throw argument_error("image_size must be >= 16");
  if (n_train <= 0 || n_val <= 0 || n_test_id <= 0 || n_test_ood <= 0)
    throw argument_error("trap spec sample counts must be positive");
}

TrapDatasets generate_trap(const TrapSpec& spec) {
  spec.validate();
  TrapDatasets out;
  out.train = build_split(spec, "train", spec.n_train, spec.rho, 0);
  out.val = build_split(spec, "val", spec.n_val, spec.rho, 1);
  out.test_id = build_split(spec, "test_id", spec.n_test_id, spec.rho, 2);
  out.test_ood = build_split(spec, "test_ood", spec.n_test_ood, -spec.rho, 3);
  return out;
}

Image augment_image(const Image& img, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle_pick(-15.0, 15.0);
  std::uniform_int_distribution<int> shift_pick(-2, 2);
  std::uniform_real_distribution<double> jitter_pick(0.9, 1.1);

  bool flip = unit(rng) < 0.5;
  double angle = angle_pick(rng) * kPi / 180.0;
  int dx = shift_pick(rng);
  int dy = shift_pick(rng);
  double brightness = jitter_pick(rng);
  double contrast = jitter_pick(rng);

  Image out(img.height, img.width);
  double cy = (img.height - 1) / 2.0, cx = (img.width - 1) / 2.0;
  double cos_a = std::cos(-angle), sin_a = std::sin(-angle);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double tx = x - dx, ty = y - dy;
      double rx = cos_a * (tx - cx) - sin_a * (ty - cy) + cx;
      double ry = sin_a * (tx - cx) + cos_a * (ty - cy) + cy;
      if (flip) rx = (img.width - 1) - rx;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = bilinear_sample(img, ry, rx, c);
    }

  double mean = 0.0;
  for (double p : out.pixels) mean += p;
  mean /= static_cast<double>(out.pixels.size());
  for (double& p : out.pixels) {
    p = (p * brightness - mean) * contrast + mean;
    p = clamp01(p);
  }
  return out;
}

Dataset load_image_folder(const std::string& root, const std::string& manifest_csv,
                          int resize_to) {
  CsvTable table = read_csv(manifest_csv);
  int path_col = table.column("path");
  int class_col = table.column("class");
  int domain_col = table.column("given_domain");
  if (path_col < 0 || class_col < 0)
    throw data_error("manifest missing path/class columns: " + manifest_csv);

  Dataset ds;
  ds.name = fs::path(root).filename().string();
  for (const auto& row : table.rows) {
    LabeledImage li;
    std::string rel = row[path_col];
    fs::path full = fs::path(root) / rel;
    li.image = read_png(full.string());
    if (resize_to > 0 && (li.image.height != resize_to || li.image.width != resize_to)) {
      Image resized(resize_to, resize_to);
      double sy = static_cast<double>(li.image.height - 1) / std::max(1, resize_to - 1);
      double sx = static_cast<double>(li.image.width - 1) / std::max(1, resize_to - 1);
      for (int y = 0; y < resize_to; ++y)
        for (int x = 0; x < resize_to; ++x)
          for (int c = 0; c < 3; ++c)
            resized.at(y, x, c) = bilinear_sample(li.image, y * sy, x * sx, c);
      li.image = std::move(resized);
    }
    try {
      li.class_label = std::stoi(row[class_col]);
    } catch (const std::exception&) {
      throw data_error("manifest row with non-numeric class id: " + row[class_col]);
    }
    if (li.class_label < 0) throw data_error("unknown class id " + row[class_col]);
    if (domain_col >= 0 && !row[domain_col].empty())
      li.given_domain = std::stoi(row[domain_col]);
    li.sample_id = rel;
    ds.samples.push_back(std::move(li));
  }
  return ds;
}

std::map<int, Dataset> split_by_domain(const Dataset& dataset,
                                       const std::map<std::string, int>& domain_of) {
  std::map<int, Dataset> out;
  for (const auto& s : dataset.samples) {
    auto it = domain_of.find(s.sample_id);
    if (it == domain_of.end())
      throw consistency_error("sample without a domain id: " + s.sample_id);
    auto& subset = out[it->second];
    if (subset.name.empty())
      subset.name = dataset.name + "/domain" + std::to_string(it->second);
    subset.samples.push_back(s);
  }
  return out;
}

namespace {

void append_split(CsvWriter& csv, const Dataset& ds, const std::string& dir,
                  const std::string& split) {
  for (const auto& s : ds.samples) {
    std::string rel = "images/" + s.sample_id + ".png";
    write_png((fs::path(dir) / rel).string(), s.image);
    csv.row({s.sample_id, rel, std::to_string(s.class_label),
             std::to_string(s.artifact_label.value_or(0)), split});
  }
}

}  // namespace

void save_trap_datasets(const TrapDatasets& data, const TrapSpec& spec,
                        const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  write_text_file((fs::path(dir) / "trapspec.json").string(), trap_spec_json(spec));
  CsvWriter csv((fs::path(dir) / "manifest.csv").string(),
                {"sample_id", "path", "class", "artifact", "split"});
  append_split(csv, data.train, dir, "train");
  append_split(csv, data.val, dir, "val");
  append_split(csv, data.test_id, dir, "test_id");
  append_split(csv, data.test_ood, dir, "test_ood");
}

TrapDatasets load_trap_datasets(const std::string& dir) {
  CsvTable table = read_csv((fs::path(dir) / "manifest.csv").string());
  int id_col = table.column("sample_id");
  int path_col = table.column("path");
  int class_col = table.column("class");
  int artifact_col = table.column("artifact");
  int split_col = table.column("split");
  if (id_col < 0 || path_col < 0 || class_col < 0 || artifact_col < 0 || split_col < 0)
    throw data_error("manifest missing required columns in " + dir);

  TrapDatasets out;
  out.train.name = "train";
  out.val.name = "val";
  out.test_id.name = "test_id";
  out.test_ood.name = "test_ood";
  for (const auto& row : table.rows) {
    LabeledImage li;
    li.sample_id = row[id_col];
    li.image = read_png((fs::path(dir) / row[path_col]).string());
    li.class_label = std::stoi(row[class_col]);
    li.artifact_label = std::stoi(row[artifact_col]);
    li.given_domain = li.artifact_label;
    const std::string& split = row[split_col];
    if (split == "train") out.train.samples.push_back(std::move(li));
    else if (split == "val") out.val.samples.push_back(std::move(li));
    else if (split == "test_id") out.test_id.samples.push_back(std::move(li));
    else if (split == "test_ood") out.test_ood.samples.push_back(std::move(li));
    else throw data_error("unknown split in manifest: " + split);
  }
  return out;
}

}  // namespace ldg
