// Command line front end: dataset synthesis, training, evaluation, prompt
// analysis, feature export, plotting and the benchmark sweep.

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "ldg/analysis.hpp"
#include "ldg/checkpoint.hpp"
#include "ldg/config.hpp"
#include "ldg/csv.hpp"
#include "ldg/data.hpp"
#include "ldg/discovery.hpp"
#include "ldg/evalkit.hpp"
#include "ldg/plots.hpp"
#include "ldg/trainer.hpp"

namespace fs = std::filesystem;
using namespace ldg;

namespace {

// exit codes: 0 success, 1 usage/config error, 2 runtime failure
constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_absolute()) return p;
  const char* root = std::getenv("LDG_RUN_ROOT");
  if (root && *root) return fs::path(root) / p;
  return p;
}

void require_fresh(const fs::path& path, bool force) {
  if (!fs::exists(path)) return;
  if (force) {
    fs::remove_all(path);
    return;
  }
  throw config_error("output already exists (pass --force to overwrite): " + path.string());
}

// Guards a run directory against concurrent writers (O_EXCL lock file).
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : lock_path_(dir / ".lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    fd_ = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw data_error("run directory is locked by another process: " + dir.string());
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(lock_path_, ec);
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path lock_path_;
  int fd_ = -1;
};

const Dataset& pick_split(const TrapDatasets& data, const std::string& split) {
  if (split == "train") return data.train;
  if (split == "val") return data.val;
  if (split == "test_id") return data.test_id;
  if (split == "test_ood") return data.test_ood;
  throw argument_error("unknown split: " + split + " (train|val|test_id|test_ood)");
}

std::string load_config_text(const std::string& path) {
  return path.empty() ? std::string("{}") : read_text_file(path);
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  std::string out;
  std::string spec_file;
  std::vector<std::string> overrides;
  std::optional<double> rho;
  std::optional<std::uint64_t> seed;
  bool sweep = false;
  bool force = false;
};

int cmd_synth(const SynthArgs& args) {
  std::vector<std::string> overrides = args.overrides;
  if (args.rho) overrides.push_back("rho=" + format_double(*args.rho));
  if (args.seed) overrides.push_back("seed=" + std::to_string(*args.seed));
  TrapSpec spec = parse_trap_spec(load_config_text(args.spec_file), overrides);

  if (!args.sweep) {
    fs::path out = resolve_out(args.out);
    require_fresh(out, args.force);
    save_trap_datasets(generate_trap(spec), spec, out.string());
    std::cout << "dataset written to " << out.string() << "\n";
    return kOk;
  }

  const double rhos[] = {0.0, 0.3, 0.5, 0.7, 0.9, 1.0};
  for (double rho : rhos) {
    TrapSpec s = spec;
    s.rho = rho;
    char name[32];
    std::snprintf(name, sizeof(name), "rho_%.1f", rho);
    fs::path out = resolve_out(args.out) / name;
    require_fresh(out, args.force);
    save_trap_datasets(generate_trap(s), s, out.string());
    std::cout << "dataset written to " << out.string() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
  std::string config_file;
  std::string preset;
  std::string data_dir;
  std::string image_root;
  std::string train_manifest;
  std::string val_manifest;
  std::string out;
  std::vector<std::string> overrides;
  bool force = false;
};

int cmd_train(const TrainArgs& args) {
  if (!args.preset.empty() && !args.config_file.empty())
    throw config_error("pass either --preset or --config, not both");
  TrainConfig config;
  if (!args.preset.empty()) {
    config = preset_train_config(args.preset);
    std::string text = train_config_json(config);
    std::vector<std::string> overrides = args.overrides;
    config = parse_train_config(text, overrides);
  } else {
    config = parse_train_config(load_config_text(args.config_file), args.overrides);
  }

  TrapDatasets trap;
  Dataset folder_train, folder_val;
  FitDatasets sets;
  if (!args.data_dir.empty()) {
    trap = load_trap_datasets(args.data_dir);
    sets.train = &trap.train;
    sets.val = &trap.val;
    sets.ood_val = &trap.test_ood;
  } else if (!args.image_root.empty()) {
    if (args.train_manifest.empty() || args.val_manifest.empty())
      throw config_error("--image-root requires --train-manifest and --val-manifest");
    folder_train = load_image_folder(args.image_root, args.train_manifest,
                                     config.encoder.image_size);
    folder_val = load_image_folder(args.image_root, args.val_manifest,
                                   config.encoder.image_size);
    sets.train = &folder_train;
    sets.val = &folder_val;
  } else {
    throw config_error("train needs --data or --image-root");
  }

  fs::path out = resolve_out(args.out);
  require_fresh(out, args.force);
  fs::create_directories(out);
  DirLock lock(out);

  write_text_file((out / "config.json").string(), train_config_json(config));

  FitResult result = fit(config, sets);

  Checkpoint ckpt;
  ckpt.seed = config.seed;
  ckpt.toggles = config.toggles;
  ckpt.prompt_len = config.prompt_len;
  ckpt.num_domains = config.num_domains;
  ckpt.model = result.model;
  ckpt.assignment = result.assignment;
  ckpt.selected_epoch = result.history.selected_epoch;
  ckpt.selected_metric = result.history.selected_metric;
  save_checkpoint((out / "checkpoint.bin").string(), ckpt);

  write_history_csv((out / "history.csv").string(), result.history);
  write_step_log_csv((out / "train_log.csv").string(), result.step_log);
  if (result.assignment)
    write_assignment_csv((out / "assignment.csv").string(), *result.assignment, *sets.train);
  if (!result.diagnostics.empty())
    write_diagnostics_csv((out / "diagnostics.csv").string(), result.diagnostics);

  std::cout << "run written to " << out.string() << " (selected epoch "
            << result.history.selected_epoch << ", val metric "
            << format_double(result.history.selected_metric) << ")\n";
  return kOk;
}

// ----------------------------------------------------------------- eval ---

struct EvalArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "test_ood";
  std::string metric = "roc_auc";
  std::string out;
  bool force = false;
};

int cmd_eval(const EvalArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  TrapDatasets trap = load_trap_datasets(args.data_dir);
  const Dataset& ds = pick_split(trap, args.split);

  TrainConfig::Metric metric;
  if (args.metric == "roc_auc") metric = TrainConfig::Metric::auc;
  else if (args.metric == "accuracy") metric = TrainConfig::Metric::accuracy;
  else throw argument_error("metric must be roc_auc or accuracy");

  double value = evaluate_metric(ckpt.model, ckpt.toggles, ds, metric, /*prompted_path=*/true);

  fs::path out = resolve_out(args.out);
  require_fresh(out, args.force);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  MetricReport report{ds.name.empty() ? args.split : ds.name, args.metric, value, ds.size(),
                      ckpt.seed};
  write_metrics_csv(out.string(), {report});
  std::cout << args.metric << " on " << args.split << ": " << format_double(value) << "\n";
  return kOk;
}

// -------------------------------------------------------------- analyze ---

struct AnalyzeArgs {
  std::string checkpoint;
  std::string source_data;
  std::string target_data;
  std::string target_split = "test_ood";
  std::string out_dir;
  bool plot = false;
  bool force = false;
};

int cmd_analyze(const AnalyzeArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  TrapDatasets source = load_trap_datasets(args.source_data);
  TrapDatasets target_all =
      args.target_data.empty() ? load_trap_datasets(args.source_data)
                               : load_trap_datasets(args.target_data);
  const Dataset& target = pick_split(target_all, args.target_split);

  DomainDistanceReport report = analyze_prompt_weights(ckpt, source.train, target);

  fs::path out = resolve_out(args.out_dir);
  require_fresh(out, args.force);
  fs::create_directories(out);
  write_distance_csv((out / "domain_weights.csv").string(), report);
  if (report.spearman_correlation) {
    CsvWriter csv((out / "correlation.csv").string(), {"metric", "value"});
    csv.row({"spearman", format_double(*report.spearman_correlation)});
  }
  if (args.plot)
    render_distance_weight_pair((out / "distance_weight.png").string(), report);

  std::cout << "analysis written to " << out.string();
  if (report.spearman_correlation)
    std::cout << " (spearman " << format_double(*report.spearman_correlation) << ")";
  std::cout << "\n";
  return kOk;
}

// -------------------------------------------------------------- inspect ---

struct InspectArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "val";
  std::string out_dir;
  bool force = false;
};

int cmd_inspect(const InspectArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  if (!ckpt.toggles.P || !ckpt.model.bank)
    throw config_error("checkpoint has no domain prompts to inspect");
  fs::path out = resolve_out(args.out_dir);
  require_fresh(out, args.force);
  fs::create_directories(out);

  for (int m = 0; m < ckpt.model.bank->M; ++m) {
    Matrix p = generate_prompt(*ckpt.model.bank, m);
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < p.cols(); ++j) header.push_back("d" + std::to_string(j));
    CsvWriter csv((out / ("prompt_domain" + std::to_string(m) + ".csv")).string(), header);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      std::vector<std::string> row;
      for (Eigen::Index j = 0; j < p.cols(); ++j) row.push_back(format_double(p(i, j)));
      csv.row(row);
    }
  }

  if (ckpt.toggles.A && ckpt.model.adapter && !args.data_dir.empty()) {
    TrapDatasets trap = load_trap_datasets(args.data_dir);
    write_weight_stats_csv((out / "weight_stats.csv").string(), ckpt.model, ckpt.toggles,
                           pick_split(trap, args.split));
  }
  std::cout << "prompt dump written to " << out.string() << "\n";
  return kOk;
}

// ------------------------------------------------------- export-features ---

struct ExportArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "train";
  int layer = 1;
  std::string out;
  bool force = false;
};

int cmd_export_features(const ExportArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  TrapDatasets trap = load_trap_datasets(args.data_dir);
  const Dataset& ds = pick_split(trap, args.split);

  StyleFeatureMatrix feats =
      collect_style_features(ckpt.model.cfg, ckpt.model.enc, ds, args.layer);

  std::vector<int> pseudo(ds.size(), 0);
  if (ckpt.assignment) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto it = ckpt.assignment->assignment.find(ds.samples[i].sample_id);
      if (it != ckpt.assignment->assignment.end()) {
        pseudo[i] = it->second;
      } else {
        // unseen sample: nearest frozen centroid
        Eigen::Index best = 0;
        (ckpt.assignment->centroids.rowwise() - feats.features.row(i))
            .rowwise()
            .squaredNorm()
            .minCoeff(&best);
        pseudo[i] = static_cast<int>(best);
      }
    }
  }
  std::vector<int> classes;
  for (const auto& s : ds.samples) classes.push_back(s.class_label);

  fs::path out = resolve_out(args.out);
  require_fresh(out, args.force);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_feature_export_csv(out.string(), feats, pseudo, classes);
  std::cout << "features written to " << out.string() << "\n";
  return kOk;
}

// ----------------------------------------------------------------- plot ---

struct PlotArgs {
  std::string kind;  // bias-sweep | distance-weight
  std::string in;
  std::string out;
  bool force = false;
};

int cmd_plot(const PlotArgs& args) {
  fs::path out = resolve_out(args.out);
  require_fresh(out, args.force);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  CsvTable table = read_csv(args.in);
  if (args.kind == "bias-sweep") {
    int rho_col = table.column("rho");
    int method_col = table.column("method");
    int auc_col = table.column("mean_auc_ood");
    if (rho_col < 0 || method_col < 0 || auc_col < 0)
      throw data_error("bias-sweep plot needs rho,method,mean_auc_ood columns");
    std::map<std::string, PlotSeries> series;
    for (const auto& row : table.rows) {
      auto& s = series[row[method_col]];
      s.label = row[method_col];
      s.x.push_back(std::stod(row[rho_col]));
      s.y.push_back(std::stod(row[auc_col]));
    }
    std::vector<PlotSeries> list;
    for (auto& [name, s] : series) list.push_back(s);
    render_line_chart(out.string(), "ood auc vs bias", "bias factor", "auc", list);
  } else if (args.kind == "distance-weight") {
    int dom_col = table.column("domain");
    int fre_col = table.column("frechet");
    int w_col = table.column("mean_weight");
    if (dom_col < 0 || fre_col < 0 || w_col < 0)
      throw data_error("distance-weight plot needs domain,frechet,mean_weight columns");
    DomainDistanceReport report;
    std::vector<double> d, w;
    for (const auto& row : table.rows) {
      DomainDistanceRow r;
      r.domain = std::stoi(row[dom_col]);
      r.frechet = std::stod(row[fre_col]);
      r.mean_weight = std::stod(row[w_col]);
      d.push_back(r.frechet);
      w.push_back(r.mean_weight);
      report.rows.push_back(r);
    }
    if (report.rows.size() >= 3) report.spearman_correlation = spearman(d, w);
    render_distance_weight_pair(out.string(), report);
  } else {
    throw argument_error("plot kind must be bias-sweep or distance-weight");
  }
  std::cout << "plot written to " << out.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- bench ---

struct BenchArgs {
  std::string out;
  std::vector<double> rhos = {0.0, 0.5, 1.0};
  int seeds = 3;
  int n_train = 512;
  int epochs = 16;
  int cluster_epoch = 4;
  int num_domains = 2;
  bool full_ablation = false;
  bool plot = true;
  bool force = false;
};

int cmd_bench(const BenchArgs& args) {
  fs::path out = resolve_out(args.out);
  require_fresh(out, args.force);
  fs::create_directories(out);
  DirLock lock(out);

  std::vector<Toggles> methods = {Toggles::none(), Toggles::full()};
  if (args.full_ablation) {
    methods.push_back({true, false, false, false});          // +P
    methods.push_back({true, true, false, false});           // +P+A
    methods.push_back({true, true, true, false});            // +P+A+M
  }

  CsvWriter runs_csv((out / "runs.csv").string(),
                     {"rho", "seed", "method", "auc_ood", "auc_id", "selected_epoch"});
  std::map<std::pair<double, std::string>, std::vector<double>> ood_by_cell;

  for (double rho : args.rhos) {
    for (int seed = 0; seed < args.seeds; ++seed) {
      TrapSpec spec;
      spec.rho = rho;
      spec.n_train = args.n_train;
      spec.n_val = args.n_train / 2;
      spec.n_test_id = args.n_train / 2;
      spec.n_test_ood = args.n_train / 2;
      spec.seed = 1000 + seed;
      TrapDatasets data = generate_trap(spec);
      FitDatasets sets{&data.train, &data.val, &data.test_ood};

      for (const Toggles& toggles : methods) {
        TrainConfig config;
        config.encoder.image_size = spec.image_size;
        config.encoder.patch_size = 8;
        config.encoder.embed_dim = 64;
        config.encoder.depth = 4;
        config.encoder.num_heads = 4;
        config.toggles = toggles;
        config.num_domains = args.num_domains;
        config.epochs = args.epochs;
        config.cluster_epoch = args.cluster_epoch;
        config.seed = static_cast<std::uint64_t>(seed);
        config.patience = args.epochs;
        FitResult result = fit(config, sets);

        double auc_ood = evaluate_metric(result.model, toggles, data.test_ood,
                                         TrainConfig::Metric::auc, true);
        double auc_id = evaluate_metric(result.model, toggles, data.test_id,
                                        TrainConfig::Metric::auc, true);
        runs_csv.row({format_double(rho), std::to_string(seed), toggles.tag(),
                      format_double(auc_ood), format_double(auc_id),
                      std::to_string(result.history.selected_epoch)});
        runs_csv.flush();
        ood_by_cell[{rho, toggles.tag()}].push_back(auc_ood);
        std::cout << "rho=" << rho << " seed=" << seed << " " << toggles.tag()
                  << ": ood auc " << format_double(auc_ood) << "\n";
      }
    }
  }

  CsvWriter summary((out / "summary.csv").string(),
                    {"rho", "method", "mean_auc_ood", "std_auc_ood", "n_seeds"});
  for (const auto& [cell, values] : ood_by_cell) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
    summary.row({format_double(cell.first), cell.second, format_double(mean),
                 format_double(std::sqrt(var)), std::to_string(values.size())});
  }
  summary.flush();

  if (args.plot) {
    PlotArgs pargs;
    pargs.kind = "bias-sweep";
    pargs.in = (out / "summary.csv").string();
    pargs.out = (out / "bias_sweep.png").string();
    pargs.force = true;
    cmd_plot(pargs);
  }
  std::cout << "bench results in " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent domain generalization trainer"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic biased dataset");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--spec", synth.spec_file, "trap spec json file");
  synth_cmd->add_option("--set", synth.overrides, "spec override key=value");
  synth_cmd->add_option("--rho", synth.rho, "bias factor in [0,1]");
  synth_cmd->add_option("--seed", synth.seed, "generation seed");
  synth_cmd->add_flag("--sweep", synth.sweep, "emit the six-level bias sweep");
  synth_cmd->add_flag("--force", synth.force, "overwrite existing outputs");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "run the training pipeline");
  train_cmd->add_option("--config", train.config_file, "train config json file");
  train_cmd->add_option("--preset", train.preset, "config preset (erm-desk|pldg-desk|pldg-vitb16)");
  train_cmd->add_option("--data", train.data_dir, "dataset directory from synth");
  train_cmd->add_option("--image-root", train.image_root, "image folder root");
  train_cmd->add_option("--train-manifest", train.train_manifest, "path,class[,given_domain] csv");
  train_cmd->add_option("--val-manifest", train.val_manifest, "validation manifest csv");
  train_cmd->add_option("--out", train.out, "run directory")->required();
  train_cmd->add_option("--set", train.overrides, "config override key=value");
  train_cmd->add_flag("--force", train.force, "overwrite existing outputs");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval.data_dir, "dataset directory")->required();
  eval_cmd->add_option("--split", eval.split, "dataset split");
  eval_cmd->add_option("--metric", eval.metric, "roc_auc|accuracy");
  eval_cmd->add_option("--out", eval.out, "metrics csv path")->required();
  eval_cmd->add_flag("--force", eval.force, "overwrite existing outputs");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "prompt weight vs domain distance");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint, "checkpoint file")->required();
  analyze_cmd->add_option("--source-data", analyze.source_data, "training dataset directory")
      ->required();
  analyze_cmd->add_option("--target-data", analyze.target_data,
                          "target dataset directory (defaults to source)");
  analyze_cmd->add_option("--target-split", analyze.target_split, "target split");
  analyze_cmd->add_option("--out", analyze.out_dir, "output directory")->required();
  analyze_cmd->add_flag("--plot", analyze.plot, "render the distance/weight chart");
  analyze_cmd->add_flag("--force", analyze.force, "overwrite existing outputs");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "dump prompts and weight statistics");
  inspect_cmd->add_option("--checkpoint", inspect.checkpoint, "checkpoint file")->required();
  inspect_cmd->add_option("--data", inspect.data_dir, "dataset directory for weight stats");
  inspect_cmd->add_option("--split", inspect.split, "dataset split");
  inspect_cmd->add_option("--out", inspect.out_dir, "output directory")->required();
  inspect_cmd->add_flag("--force", inspect.force, "overwrite existing outputs");

  ExportArgs exportf;
  auto* export_cmd = app.add_subcommand("export-features", "dump layer features as csv");
  export_cmd->add_option("--checkpoint", exportf.checkpoint, "checkpoint file")->required();
  export_cmd->add_option("--data", exportf.data_dir, "dataset directory")->required();
  export_cmd->add_option("--split", exportf.split, "dataset split");
  export_cmd->add_option("--layer", exportf.layer, "block index (1-based)");
  export_cmd->add_option("--out", exportf.out, "output csv path")->required();
  export_cmd->add_flag("--force", exportf.force, "overwrite existing outputs");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "render charts from result csvs");
  plot_cmd->add_option("--kind", plot.kind, "bias-sweep|distance-weight")->required();
  plot_cmd->add_option("--in", plot.in, "input csv")->required();
  plot_cmd->add_option("--out", plot.out, "output png")->required();
  plot_cmd->add_flag("--force", plot.force, "overwrite existing outputs");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "bias-sweep benchmark (erm vs full pipeline)");
  bench_cmd->add_option("--out", bench.out, "output directory")->required();
  bench_cmd->add_option("--rhos", bench.rhos, "bias factors");
  bench_cmd->add_option("--seeds", bench.seeds, "seeds per cell");
  bench_cmd->add_option("--n-train", bench.n_train, "training samples per dataset");
  bench_cmd->add_option("--epochs", bench.epochs, "epochs per run");
  bench_cmd->add_option("--cluster-epoch", bench.cluster_epoch, "clustering epoch");
  bench_cmd->add_option("--num-domains", bench.num_domains, "cluster count M");
  bench_cmd->add_flag("--full-ablation", bench.full_ablation, "also run +P, +P+A, +P+A+M");
  bench_cmd->add_flag("--plot,!--no-plot", bench.plot, "render the sweep chart");
  bench_cmd->add_flag("--force", bench.force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsageError;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    if (*analyze_cmd) return cmd_analyze(analyze);
    if (*inspect_cmd) return cmd_inspect(inspect);
    if (*export_cmd) return cmd_export_features(exportf);
    if (*plot_cmd) return cmd_plot(plot);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const argument_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
