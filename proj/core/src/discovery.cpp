#include "ldg/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "ldg/csv.hpp"
#include "ldg/rng.hpp"

namespace ldg {

namespace {

double squared_distance(const Matrix& features, Eigen::Index row, const Matrix& centroids,
                        Eigen::Index c) {
  return (features.row(row) - centroids.row(c)).squaredNorm();
}

struct LloydOutcome {
  std::vector<int> assignment;
  Matrix centroids;
  double inertia = 0.0;
  std::vector<double> sse_history;
};

double total_sse(const Matrix& features, const std::vector<int>& assignment,
                 const Matrix& centroids) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    sse += squared_distance(features, i, centroids, assignment[i]);
  return sse;
}

Matrix kmeanspp_seed(const Matrix& features, int M, std::mt19937_64& rng) {
  const Eigen::Index n = features.rows();
  Matrix centroids(M, features.cols());
  std::uniform_int_distribution<Eigen::Index> uniform(0, n - 1);
  centroids.row(0) = features.row(uniform(rng));
  std::vector<double> dist2(n);
  for (int c = 1; c < M; ++c) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (int j = 0; j < c; ++j)
        best = std::min(best, squared_distance(features, i, centroids, j));
      dist2[i] = best;
      sum += best;
    }
    if (sum <= 0.0) {
      centroids.row(c) = features.row(uniform(rng));
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, sum);
    double target = u(rng);
    Eigen::Index pick = n - 1;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += dist2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    centroids.row(c) = features.row(pick);
  }
  return centroids;
}

LloydOutcome lloyd(const Matrix& features, int M, std::mt19937_64& rng,
                   const KMeansOptions& opts) {
  const Eigen::Index n = features.rows();
  LloydOutcome out;
  out.centroids = kmeanspp_seed(features, M, rng);
  out.assignment.assign(n, 0);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // assignment step, ties to the lowest cluster index
    std::vector<int> count(M, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(features, i, out.centroids, 0);
      for (int c = 1; c < M; ++c) {
        double dcur = squared_distance(features, i, out.centroids, c);
        if (dcur < best_d) {
          best_d = dcur;
          best = c;
        }
      }
      out.assignment[i] = best;
      ++count[best];
    }

    // empty clusters: re-seed from the point farthest from its centroid
    for (int c = 0; c < M; ++c) {
      if (count[c] > 0) continue;
      Eigen::Index farthest = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (count[out.assignment[i]] <= 1) continue;  // keep donors non-empty
        double dcur = squared_distance(features, i, out.centroids, out.assignment[i]);
        if (dcur > far_d) {
          far_d = dcur;
          farthest = i;
        }
      }
      --count[out.assignment[farthest]];
      out.assignment[farthest] = c;
      ++count[c];
      out.centroids.row(c) = features.row(farthest);
    }

    // update step
    Matrix next = Matrix::Zero(M, features.cols());
    for (Eigen::Index i = 0; i < n; ++i) next.row(out.assignment[i]) += features.row(i);
    for (int c = 0; c < M; ++c)
      if (count[c] > 0) next.row(c) /= static_cast<double>(count[c]);
      else next.row(c) = out.centroids.row(c);

    double shift = 0.0;
    for (int c = 0; c < M; ++c)
      shift = std::max(shift, (next.row(c) - out.centroids.row(c)).norm());
    out.centroids = next;
    out.sse_history.push_back(total_sse(features, out.assignment, out.centroids));
    if (shift < opts.tol) break;
  }
  out.inertia = out.sse_history.empty()
                    ? total_sse(features, out.assignment, out.centroids)
                    : out.sse_history.back();
  return out;
}

}  // namespace

StyleFeatureMatrix collect_style_features(const EncoderConfig& cfg, const EncoderParams& params,
                                          const Dataset& dataset, int layer, int epoch) {
  if (dataset.empty()) throw argument_error("collect_style_features on an empty dataset");
  StyleFeatureMatrix out;
  out.layer = layer;
  out.epoch = epoch;
  out.features = extract_cls(cfg, params, image_pointers(dataset), layer);
  out.sample_ids.reserve(dataset.size());
  std::set<std::string> seen;
  for (const auto& s : dataset.samples) {
    if (!seen.insert(s.sample_id).second)
      throw consistency_error("duplicate sample_id: " + s.sample_id);
    out.sample_ids.push_back(s.sample_id);
  }
  return out;
}

KMeansResult kmeans(const Matrix& features, int M, std::uint64_t seed,
                    const KMeansOptions& opts) {
  const Eigen::Index n = features.rows();
  if (M < 1) throw argument_error("kmeans requires M >= 1");
  if (n < M)
    throw argument_error("kmeans: M (" + std::to_string(M) + ") exceeds sample count (" +
                         std::to_string(n) + ")");
  if (!features.allFinite()) throw data_error("kmeans: non-finite feature values");

  if (M == 1) {
    KMeansResult out;
    out.assignment.assign(n, 0);
    out.centroids = features.colwise().mean();
    out.inertia = total_sse(features, out.assignment, out.centroids);
    out.sse_history = {out.inertia};
    return out;
  }

  KMeansResult best;
  double best_sse = std::numeric_limits<double>::max();
  for (int restart = 0; restart < std::max(1, opts.n_init); ++restart) {
    std::mt19937_64 rng(derive_seed(seed, Stream::kmeans, static_cast<std::uint64_t>(restart)));
    LloydOutcome run = lloyd(features, M, rng, opts);
    if (run.inertia < best_sse) {
      best_sse = run.inertia;
      best.assignment = std::move(run.assignment);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
      best.sse_history = std::move(run.sse_history);
    }
  }
  return best;
}

int PseudoDomainAssignment::domain_of(const std::string& sample_id) const {
  auto it = assignment.find(sample_id);
  if (it == assignment.end())
    throw consistency_error("sample_id without pseudo-domain assignment: " + sample_id);
  return it->second;
}

std::vector<int> PseudoDomainAssignment::domains_for(const Dataset& dataset) const {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.push_back(domain_of(s.sample_id));
  return out;
}

PseudoDomainAssignment assign_pseudo_domains(
    const Dataset& dataset, const StyleFeatureMatrix& features, const KMeansResult& km,
    const std::optional<PseudoDomainAssignment>& existing) {
  if (existing.has_value())
    throw consistency_error("assignment already frozen (one-time clustering)");
  if (features.sample_ids.size() != dataset.size() ||
      km.assignment.size() != dataset.size())
    throw consistency_error("clustering result is misaligned with the dataset");
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.samples[i].sample_id != features.sample_ids[i])
      throw consistency_error("sample_id mismatch at row " + std::to_string(i) + ": " +
                              dataset.samples[i].sample_id + " vs " + features.sample_ids[i]);
  PseudoDomainAssignment out;
  out.M = static_cast<int>(km.centroids.rows());
  out.centroids = km.centroids;
  out.layer = features.layer;
  out.epoch = features.epoch;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out.assignment[features.sample_ids[i]] = km.assignment[i];
  return out;
}

double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw argument_error("nmi: label vectors differ in length (" +
                         std::to_string(labels_a.size()) + " vs " +
                         std::to_string(labels_b.size()) + ")");
  if (labels_a.empty()) throw argument_error("nmi on empty labelings");
  const double n = static_cast<double>(labels_a.size());

  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    pa[labels_a[i]] += 1.0;
    pb[labels_b[i]] += 1.0;
    pab[{labels_a[i], labels_b[i]}] += 1.0;
  }
  double ha = 0.0, hb = 0.0;
  for (auto& [k, c] : pa) ha -= (c / n) * std::log(c / n);
  for (auto& [k, c] : pb) hb -= (c / n) * std::log(c / n);
  if (ha <= 0.0 && hb <= 0.0) return 1.0;  // both constant
  if (ha <= 0.0 || hb <= 0.0) return 0.0;  // one constant, the other not
  double mi = 0.0;
  for (auto& [key, c] : pab) {
    double pij = c / n;
    mi += pij * std::log(pij * n * n / (pa[key.first] * pb[key.second]));
  }
  double value = mi / std::sqrt(ha * hb);
  return std::clamp(value, 0.0, 1.0);
}

void l2_normalize_rows(Matrix& features) {
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    double norm = features.row(r).norm();
    if (norm > 0.0) features.row(r) /= norm;
  }
}

std::vector<DiagnosticsRow> clustering_diagnostics(
    const EncoderConfig& cfg, const EncoderParams& params, const Dataset& dataset,
    const std::vector<int>& layers, int M, std::uint64_t seed, int epoch,
    std::map<int, std::vector<int>>& prev_assignments, bool normalize) {
  std::vector<int> classes;
  std::vector<int> given;
  bool has_given = true;
  classes.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    classes.push_back(s.class_label);
    if (s.given_domain.has_value())
      given.push_back(*s.given_domain);
    else
      has_given = false;
  }

  std::vector<DiagnosticsRow> rows;
  for (int layer : layers) {
    StyleFeatureMatrix feats = collect_style_features(cfg, params, dataset, layer, epoch);
    if (normalize) l2_normalize_rows(feats.features);
    KMeansResult km = kmeans(feats.features, M, derive_seed(seed, Stream::kmeans, layer));
    DiagnosticsRow row;
    row.epoch = epoch;
    row.layer = layer;
    row.nmi_class = nmi(km.assignment, classes);
    if (has_given) row.nmi_given_domain = nmi(km.assignment, given);
    auto prev = prev_assignments.find(layer);
    if (prev != prev_assignments.end()) row.nmi_prev = nmi(km.assignment, prev->second);
    prev_assignments[layer] = km.assignment;
    rows.push_back(row);
  }
  return rows;
}

void write_assignment_csv(const std::string& path, const PseudoDomainAssignment& assignment,
                          const Dataset& dataset) {
  CsvWriter csv(path, {"sample_id", "pseudo_domain"});
  for (const auto& s : dataset.samples)
    csv.row({s.sample_id, std::to_string(assignment.domain_of(s.sample_id))});
}

PseudoDomainAssignment read_assignment_csv(const std::string& path, int M, int layer,
                                           int epoch) {
  CsvTable table = read_csv(path);
  int id_col = table.column("sample_id");
  int dom_col = table.column("pseudo_domain");
  if (id_col < 0 || dom_col < 0)
    throw data_error("assignment csv missing sample_id/pseudo_domain columns: " + path);
  PseudoDomainAssignment out;
  out.M = M;
  out.layer = layer;
  out.epoch = epoch;
  for (const auto& row : table.rows)
    out.assignment[row[id_col]] = std::stoi(row[dom_col]);
  return out;
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows) {
  CsvWriter csv(path, {"epoch", "layer", "nmi_class", "nmi_given_domain", "nmi_prev"});
  for (const auto& r : rows) {
    csv.row({std::to_string(r.epoch), std::to_string(r.layer), format_double(r.nmi_class),
             r.nmi_given_domain ? format_double(*r.nmi_given_domain) : std::string(),
             r.nmi_prev ? format_double(*r.nmi_prev) : std::string()});
  }
}

void write_feature_export_csv(const std::string& path, const StyleFeatureMatrix& features,
                              const std::vector<int>& pseudo_domains,
                              const std::vector<int>& classes) {
  const Eigen::Index n = features.features.rows();
  const Eigen::Index d = features.features.cols();
  if (pseudo_domains.size() != static_cast<std::size_t>(n) ||
      classes.size() != static_cast<std::size_t>(n))
    throw argument_error("feature export: label lengths do not match feature rows");
  std::vector<std::string> header = {"sample_id"};
  for (Eigen::Index j = 0; j < d; ++j) header.push_back("f_" + std::to_string(j));
  header.push_back("pseudo_domain");
  header.push_back("class");
  CsvWriter csv(path, header);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::string> row = {features.sample_ids[i]};
    for (Eigen::Index j = 0; j < d; ++j) row.push_back(format_double(features.features(i, j)));
    row.push_back(std::to_string(pseudo_domains[i]));
    row.push_back(std::to_string(classes[i]));
    csv.row(row);
  }
}

}  // namespace ldg
