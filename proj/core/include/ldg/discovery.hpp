#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldg/backbone.hpp"
#include "ldg/data.hpp"

namespace ldg {

struct StyleFeatureMatrix {
  Matrix features;  // n x d, layer-L class tokens
  std::vector<std::string> sample_ids;
  int layer = 1;
  int epoch = 0;
};

// Eval-mode collection of layer-L class tokens over the whole dataset, in
// dataset order. Augmentation never applies here.
StyleFeatureMatrix collect_style_features(const EncoderConfig& cfg, const EncoderParams& params,
                                          const Dataset& dataset, int layer, int epoch = 0);

struct KMeansResult {
  std::vector<int> assignment;  // n ids in [0, M)
  Matrix centroids;             // M x d
  double inertia = 0.0;         // within-cluster SSE of the kept restart
  std::vector<double> sse_history;  // per Lloyd iteration, kept restart
};

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;
  int n_init = 10;  // k-means++ restarts, lowest SSE kept
};

KMeansResult kmeans(const Matrix& features, int M, std::uint64_t seed,
                    const KMeansOptions& opts = {});

struct PseudoDomainAssignment {
  std::map<std::string, int> assignment;  // sample_id -> domain id
  Matrix centroids;                       // M x d
  int M = 0;
  int layer = 1;
  int epoch = 0;

  int domain_of(const std::string& sample_id) const;  // throws consistency_error
  std::vector<int> domains_for(const Dataset& dataset) const;
};

// Freezes the clustering into a per-sample map. `existing` guards the
// one-time contract: a second invocation is rejected.
PseudoDomainAssignment assign_pseudo_domains(
    const Dataset& dataset, const StyleFeatureMatrix& features, const KMeansResult& km,
    const std::optional<PseudoDomainAssignment>& existing = std::nullopt);

// NMI with natural-log entropies, normalized by the geometric mean. Both
// labelings constant -> 1; exactly one constant -> 0.
double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

// L2-normalizes rows in place (zero rows left untouched). Applied to style
// features before clustering so cluster geometry tracks style direction.
void l2_normalize_rows(Matrix& features);

struct DiagnosticsRow {
  int epoch = 0;
  int layer = 0;
  double nmi_class = 0.0;
  std::optional<double> nmi_given_domain;
  std::optional<double> nmi_prev;
};

// One clustering pass per requested layer for the current model state;
// prev_assignments carries the previous epoch's labels per layer and is
// updated in place.
std::vector<DiagnosticsRow> clustering_diagnostics(
    const EncoderConfig& cfg, const EncoderParams& params, const Dataset& dataset,
    const std::vector<int>& layers, int M, std::uint64_t seed, int epoch,
    std::map<int, std::vector<int>>& prev_assignments, bool normalize = true);

void write_assignment_csv(const std::string& path, const PseudoDomainAssignment& assignment,
                          const Dataset& dataset);
PseudoDomainAssignment read_assignment_csv(const std::string& path, int M, int layer, int epoch);

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows);

// `sample_id,f_0..f_{d-1},pseudo_domain,class` rows for projection tooling.
void write_feature_export_csv(const std::string& path, const StyleFeatureMatrix& features,
                              const std::vector<int>& pseudo_domains,
                              const std::vector<int>& classes);

}  // namespace ldg
