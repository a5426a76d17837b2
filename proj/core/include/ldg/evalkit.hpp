#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

struct MetricReport {
  std::string dataset;
  std::string metric;  // "roc_auc" or "accuracy"
  double value = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

// Probability that a random positive outranks a random negative; ties count
// one half (Mann-Whitney). Throws argument_error when only one class is
// present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// One-vs-rest macro average for multi-class scores (n x C); falls back to
// the binary definition on column 1 when C == 2.
double roc_auc_ovr(const Matrix& scores, const std::vector<int>& labels);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Gaussian-moment Frechet distance with a small ridge on both covariances.
double frechet_distance(const Matrix& features_a, const Matrix& features_b,
                        double ridge = 1e-6);

// Rank correlation with average ranks on ties. Returns nullopt when fewer
// than 3 points.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

struct DomainDistanceRow {
  int domain = 0;
  double frechet = 0.0;
  double mean_weight = 0.0;
};

struct DomainDistanceReport {
  std::vector<DomainDistanceRow> rows;
  std::optional<double> spearman_correlation;  // n/a when M < 3
};

void write_metrics_csv(const std::string& path, const std::vector<MetricReport>& reports);
void write_distance_csv(const std::string& path, const DomainDistanceReport& report);

}  // namespace ldg
