#include "ldg/evalkit.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldg/csv.hpp"

namespace ldg {

namespace {

// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Matrix covariance(const Matrix& x, double ridge) {
  const double n = static_cast<double>(x.rows());
  RowVector mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean;
  Matrix cov = centered.transpose() * centered / (n - 1.0);
  cov += ridge * Matrix::Identity(x.cols(), x.cols());
  return cov;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw argument_error("roc_auc: scores and labels differ in length");
  if (scores.empty()) throw argument_error("roc_auc on empty inputs");
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw argument_error("roc_auc: labels must be binary");
    n_pos += static_cast<std::size_t>(l);
  }
  std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw argument_error("roc_auc undefined: labels contain a single class");
  for (double s : scores)
    if (!std::isfinite(s)) throw argument_error("roc_auc: non-finite score");

  std::vector<double> ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum_pos += ranks[i];
  double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc_ovr(const Matrix& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size())
    throw argument_error("roc_auc_ovr: score rows do not match label count");
  const int c = static_cast<int>(scores.cols());
  if (c == 2) {
    std::vector<double> pos(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) pos[i] = scores(i, 1);
    return roc_auc(pos, labels);
  }
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < c; ++k) {
    std::vector<double> s(scores.rows());
    std::vector<int> l(labels.size());
    bool any_pos = false, any_neg = false;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      s[i] = scores(i, k);
      l[i] = labels[i] == k ? 1 : 0;
      (l[i] ? any_pos : any_neg) = true;
    }
    if (!any_pos || !any_neg) continue;  // class absent from this split
    sum += roc_auc(s, l);
    ++counted;
  }
  if (counted == 0) throw argument_error("roc_auc undefined: labels contain a single class");
  return sum / counted;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw argument_error("accuracy: predictions and labels differ in length");
  if (predictions.empty()) throw argument_error("accuracy on empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double frechet_distance(const Matrix& features_a, const Matrix& features_b, double ridge) {
  if (features_a.cols() != features_b.cols())
    throw argument_error("frechet_distance: feature widths differ");
  if (features_a.rows() < 2 || features_b.rows() < 2)
    throw argument_error("frechet_distance needs at least 2 samples per side");
  if (!features_a.allFinite() || !features_b.allFinite())
    throw data_error("frechet_distance: non-finite features");

  RowVector mu_a = features_a.colwise().mean();
  RowVector mu_b = features_b.colwise().mean();
  Matrix cov_a = covariance(features_a, ridge);
  Matrix cov_b = covariance(features_b, ridge);

  double mean_term = (mu_a - mu_b).squaredNorm();

  // tr((Sa Sb)^{1/2}) via the symmetric product Sa^{1/2} Sb Sa^{1/2}
  Matrix sqrt_a = psd_sqrt(cov_a);
  Matrix inner = sqrt_a * cov_b * sqrt_a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(inner);
  double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  double value = mean_term + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(value, 0.0);
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw argument_error("spearman: length mismatch");
  if (a.size() < 3) return std::nullopt;
  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double mean_a = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mean_b = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = ra[i] - mean_a;
    double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;  // constant ranks
  return cov / std::sqrt(var_a * var_b);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricReport>& reports) {
  CsvWriter csv(path, {"dataset", "metric", "value", "n", "seed"});
  for (const auto& r : reports)
    csv.row({r.dataset, r.metric, format_double(r.value), std::to_string(r.n),
             std::to_string(r.seed)});
}

void write_distance_csv(const std::string& path, const DomainDistanceReport& report) {
  CsvWriter csv(path, {"domain", "frechet", "mean_weight"});
  for (const auto& r : report.rows)
    csv.row({std::to_string(r.domain), format_double(r.frechet),
             format_double(r.mean_weight)});
}

}  // namespace ldg
