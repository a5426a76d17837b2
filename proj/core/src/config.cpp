#include "ldg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ldg {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw config_error("unknown config key: " + (scope.empty() ? "" : scope + ".") +
                         it.key());
}

void apply_override(json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("override must look like key.path=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);

  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw config_error("empty override key: " + assignment);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];

  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // plain string
  }
  (*node)[parts.back()] = parsed;
}

json parse_with_overrides(const std::string& text, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid json: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be a json object");
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(std::string("config key has wrong type: ") + key);
  }
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig cfg;
  if (j.contains("preset")) {
    std::string preset = j.at("preset").get<std::string>();
    if (preset == "desk") cfg = EncoderConfig::desk();
    else if (preset == "vitb16") cfg = EncoderConfig::vitb16();
    else throw config_error("unknown encoder preset: " + preset);
  }
  reject_unknown_keys(j, {"preset", "image_size", "patch_size", "embed_dim", "depth",
                          "num_heads", "num_classes", "drop_rate"},
                      "encoder");
  read_field(j, "image_size", cfg.image_size);
  read_field(j, "patch_size", cfg.patch_size);
  read_field(j, "embed_dim", cfg.embed_dim);
  read_field(j, "depth", cfg.depth);
  read_field(j, "num_heads", cfg.num_heads);
  read_field(j, "num_classes", cfg.num_classes);
  read_field(j, "drop_rate", cfg.drop_rate);
  return cfg;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  reject_unknown_keys(
      j, {"preset", "encoder", "toggles", "num_domains", "prompt_len", "cluster_layer",
          "cluster_epoch", "epochs", "batch_size", "lr", "weight_decay", "alpha",
          "lambda_w", "double_norm", "patience", "seed", "selection", "val_metric",
          "augment", "normalize_style_features", "per_class_clustering",
          "freeze_backbone", "prompt_lr_multiplier", "diag_layers", "num_threads"},
      "");
  if (j.contains("preset")) cfg = preset_train_config(j.at("preset").get<std::string>());
  if (j.contains("encoder")) cfg.encoder = encoder_from_json(j.at("encoder"));
  if (j.contains("toggles")) {
    const json& t = j.at("toggles");
    reject_unknown_keys(t, {"P", "A", "M", "G"}, "toggles");
    read_field(t, "P", cfg.toggles.P);
    read_field(t, "A", cfg.toggles.A);
    read_field(t, "M", cfg.toggles.M);
    read_field(t, "G", cfg.toggles.G);
  }
  read_field(j, "num_domains", cfg.num_domains);
  read_field(j, "prompt_len", cfg.prompt_len);
  read_field(j, "cluster_layer", cfg.cluster_layer);
  read_field(j, "cluster_epoch", cfg.cluster_epoch);
  read_field(j, "epochs", cfg.epochs);
  read_field(j, "batch_size", cfg.batch_size);
  read_field(j, "lr", cfg.lr);
  read_field(j, "weight_decay", cfg.weight_decay);
  read_field(j, "alpha", cfg.alpha);
  read_field(j, "lambda_w", cfg.lambda_w);
  read_field(j, "double_norm", cfg.double_norm);
  read_field(j, "patience", cfg.patience);
  read_field(j, "seed", cfg.seed);
  if (j.contains("selection")) {
    std::string s = j.at("selection").get<std::string>();
    if (s == "train-domain-val") cfg.selection = TrainConfig::Selection::train_domain_val;
    else if (s == "ood-val") cfg.selection = TrainConfig::Selection::ood_val;
    else throw config_error("selection must be train-domain-val or ood-val");
  }
  if (j.contains("val_metric")) {
    std::string s = j.at("val_metric").get<std::string>();
    if (s == "auc") cfg.val_metric = TrainConfig::Metric::auc;
    else if (s == "accuracy") cfg.val_metric = TrainConfig::Metric::accuracy;
    else throw config_error("val_metric must be auc or accuracy");
  }
  read_field(j, "augment", cfg.augment);
  read_field(j, "normalize_style_features", cfg.normalize_style_features);
  read_field(j, "per_class_clustering", cfg.per_class_clustering);
  read_field(j, "freeze_backbone", cfg.freeze_backbone);
  read_field(j, "prompt_lr_multiplier", cfg.prompt_lr_multiplier);
  read_field(j, "diag_layers", cfg.diag_layers);
  read_field(j, "num_threads", cfg.num_threads);
  cfg.validate();
  return cfg;
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text,
                               const std::vector<std::string>& overrides) {
  return train_config_from_json(parse_with_overrides(json_text, overrides));
}

std::string train_config_json(const TrainConfig& cfg) {
  json j;
  j["encoder"] = {{"image_size", cfg.encoder.image_size},
                  {"patch_size", cfg.encoder.patch_size},
                  {"embed_dim", cfg.encoder.embed_dim},
                  {"depth", cfg.encoder.depth},
                  {"num_heads", cfg.encoder.num_heads},
                  {"num_classes", cfg.encoder.num_classes},
                  {"drop_rate", cfg.encoder.drop_rate}};
  j["toggles"] = {{"P", cfg.toggles.P}, {"A", cfg.toggles.A}, {"M", cfg.toggles.M},
                  {"G", cfg.toggles.G}};
  j["num_domains"] = cfg.num_domains;
  j["prompt_len"] = cfg.prompt_len;
  j["cluster_layer"] = cfg.cluster_layer;
  j["cluster_epoch"] = cfg.cluster_epoch;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["alpha"] = cfg.alpha;
  j["lambda_w"] = cfg.lambda_w;
  j["double_norm"] = cfg.double_norm;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["selection"] = cfg.selection == TrainConfig::Selection::ood_val ? "ood-val"
                                                                    : "train-domain-val";
  j["val_metric"] = cfg.val_metric == TrainConfig::Metric::accuracy ? "accuracy" : "auc";
  j["augment"] = cfg.augment;
  j["normalize_style_features"] = cfg.normalize_style_features;
  j["per_class_clustering"] = cfg.per_class_clustering;
  j["freeze_backbone"] = cfg.freeze_backbone;
  j["prompt_lr_multiplier"] = cfg.prompt_lr_multiplier;
  j["diag_layers"] = cfg.diag_layers;
  j["num_threads"] = cfg.num_threads;
  return j.dump(2) + "\n";
}

TrapSpec parse_trap_spec(const std::string& json_text,
                         const std::vector<std::string>& overrides) {
  json j = parse_with_overrides(json_text, overrides);
  reject_unknown_keys(j, {"rho", "num_classes", "artifacts", "style_mode", "image_size",
                          "n_train", "n_val", "n_test_id", "n_test_ood", "seed"},
                      "");
  TrapSpec spec;
  read_field(j, "rho", spec.rho);
  read_field(j, "num_classes", spec.num_classes);
  if (j.contains("artifacts")) {
    spec.artifacts.clear();
    for (const auto& name : j.at("artifacts"))
      spec.artifacts.push_back(artifact_kind_from_string(name.get<std::string>()));
  }
  if (j.contains("style_mode")) {
    std::string s = j.at("style_mode").get<std::string>();
    if (s == "biased") spec.style_mode = StyleMode::biased;
    else if (s == "uniform") spec.style_mode = StyleMode::uniform;
    else throw config_error("style_mode must be biased or uniform");
  }
  read_field(j, "image_size", spec.image_size);
  read_field(j, "n_train", spec.n_train);
  read_field(j, "n_val", spec.n_val);
  read_field(j, "n_test_id", spec.n_test_id);
  read_field(j, "n_test_ood", spec.n_test_ood);
  read_field(j, "seed", spec.seed);
  spec.validate();
  return spec;
}

std::string trap_spec_json(const TrapSpec& spec) {
  json j;
  j["rho"] = spec.rho;
  j["num_classes"] = spec.num_classes;
  std::vector<std::string> kinds;
  for (auto k : spec.artifacts) kinds.push_back(to_string(k));
  j["artifacts"] = kinds;
  j["style_mode"] = spec.style_mode == StyleMode::biased ? "biased" : "uniform";
  j["image_size"] = spec.image_size;
  j["n_train"] = spec.n_train;
  j["n_val"] = spec.n_val;
  j["n_test_id"] = spec.n_test_id;
  j["n_test_ood"] = spec.n_test_ood;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

TrainConfig preset_train_config(const std::string& name) {
  TrainConfig cfg;
  cfg.encoder = EncoderConfig::desk();
  if (name == "erm-desk") {
    cfg.toggles = Toggles::none();
    return cfg;
  }
  if (name == "pldg-desk") {
    cfg.toggles = Toggles::full();
    return cfg;
  }
  if (name == "pldg-vitb16") {
    // the paper-scale preset: pretrained-backbone learning rates
    cfg.encoder = EncoderConfig::vitb16();
    cfg.toggles = Toggles::full();
    cfg.lr = 5e-6;
    cfg.weight_decay = 1e-2;
    cfg.epochs = 60;
    cfg.cluster_epoch = 5;
    return cfg;
  }
  throw config_error("unknown preset: " + name);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open file for writing: " + path);
  out << content;
}

}  // namespace ldg
