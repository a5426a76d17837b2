#include "ldg/analysis.hpp"

#include "ldg/trainer.hpp"

namespace ldg {

DomainDistanceReport analyze_prompt_weights(const Checkpoint& ckpt, const Dataset& source,
                                            const Dataset& target) {
  if (!ckpt.toggles.P || !ckpt.toggles.A || !ckpt.model.bank || !ckpt.model.adapter)
    throw config_error("adapter not present in checkpoint; analyze needs a +P+A run");
  if (!ckpt.assignment)
    throw config_error("checkpoint carries no pseudo-domain assignment");
  if (target.size() < 2) throw argument_error("target dataset needs at least 2 samples");

  const Model& model = ckpt.model;
  const int M = model.bank->M;

  Matrix target_features = forward_plain(model.cfg, model.enc, image_pointers(target)).cls;
  Prediction target_pred = predict(model, ckpt.toggles, image_pointers(target));

  std::map<std::string, int> domain_of;
  for (const auto& [id, dom] : ckpt.assignment->assignment) domain_of[id] = dom;
  std::map<int, Dataset> per_domain = split_by_domain(source, domain_of);

  DomainDistanceReport report;
  std::vector<double> distances, weights;
  for (int m = 0; m < M; ++m) {
    auto it = per_domain.find(m);
    if (it == per_domain.end() || it->second.size() < 2)
      throw data_error("pseudo-domain " + std::to_string(m) +
                       " has fewer than 2 source samples");
    Matrix feats = forward_plain(model.cfg, model.enc, image_pointers(it->second)).cls;
    DomainDistanceRow row;
    row.domain = m;
    row.frechet = frechet_distance(feats, target_features);
    row.mean_weight = target_pred.weights.col(m).mean();
    distances.push_back(row.frechet);
    weights.push_back(row.mean_weight);
    report.rows.push_back(row);
  }
  if (M >= 3) report.spearman_correlation = spearman(distances, weights);
  return report;
}

}  // namespace ldg
