#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

// Dense H x W x 3 image, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major, interleaved rgb

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}

  double& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  void clamp01();
};

struct LabeledImage {
  Image image;
  int class_label = 0;
  std::optional<int> given_domain;
  std::optional<int> artifact_label;  // ground-truth planted artifact, synthetic only
  std::string sample_id;
};

struct Dataset {
  std::string name;
  std::vector<LabeledImage> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

enum class ArtifactKind { corner_patch, stripe_ruler, color_tint, curve_hair };

std::string to_string(ArtifactKind kind);
ArtifactKind artifact_kind_from_string(const std::string& s);

// How artifact styles are attached to samples:
//   biased  — artifact presence correlates with the class label at strength rho;
//             test_ood reverses the correlation. artifact_label is 0 (absent)
//             or 1+kind_index.
//   uniform — every sample carries exactly one artifact kind, balanced within
//             each class so style stays independent of the class label;
//             artifact_label is 1+kind_index here too.
enum class StyleMode { biased, uniform };

struct TrapSpec {
  double rho = 1.0;  // bias factor in [0,1]
  int num_classes = 2;
  std::vector<ArtifactKind> artifacts = {ArtifactKind::color_tint};
  StyleMode style_mode = StyleMode::biased;
  int image_size = 32;
  int n_train = 512;
  int n_val = 256;
  int n_test_id = 256;
  int n_test_ood = 256;
  std::uint64_t seed = 0;

  void validate() const;  // throws argument_error
};

struct TrapDatasets {
  Dataset train;
  Dataset val;
  Dataset test_id;
  Dataset test_ood;
};

// Builds the synthetic biased datasets. The class signal is a filled blob
// (class 0) versus a ring (class 1); artifacts are planted per the spec's
// style mode. Pure function of the spec: identical specs produce identical
// datasets.
TrapDatasets generate_trap(const TrapSpec& spec);

// Train-time augmentation: random horizontal flip, shift crop, rotation and
// color jitter. Deterministic given the rng state.
Image augment_image(const Image& img, std::mt19937_64& rng);

// Loads `path,class[,given_domain]` manifest rows relative to root.
Dataset load_image_folder(const std::string& root, const std::string& manifest_csv,
                          int resize_to = 0);

std::map<int, Dataset> split_by_domain(const Dataset& dataset,
                                       const std::map<std::string, int>& domain_of);

// Persists datasets as png files plus `sample_id,path,class,artifact,split`
// manifest rows; the spec is stored alongside for provenance.
void save_trap_datasets(const TrapDatasets& data, const TrapSpec& spec, const std::string& dir);
TrapDatasets load_trap_datasets(const std::string& dir);

}  // namespace ldg
