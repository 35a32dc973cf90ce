// Batch front-end for object-removal attack simulation and evaluation on
// KITTI-format datasets. Subcommands: synth, attack, eval, proxy-sweep.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ora/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool keep_going = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "JSON run config; flags override individual fields");
  cmd->add_option("--seed", flags.seed, "RNG seed");
  cmd->add_option("--workers", flags.workers, "frame-level worker threads");
  cmd->add_flag("--keep-going", flags.keep_going,
                "record per-frame errors and continue");
}

ora::RunConfig load_config(const CommonFlags& flags) {
  ora::RunConfig config;
  if (!flags.config_path.empty()) {
    const std::string text = ora::read_text_file(flags.config_path);
    nlohmann::json doc = nlohmann::json::parse(text, nullptr,
                                               /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      throw ora::ConfigError("config file is not valid JSON: " +
                             flags.config_path);
    }
    config = ora::run_config_from_json(doc);
  }
  if (flags.seed.has_value()) config.attack.rng_seed = *flags.seed;
  if (flags.workers.has_value()) config.workers = *flags.workers;
  if (flags.keep_going) config.keep_going = true;
  return config;
}

int report_failures(const std::vector<ora::FrameFailure>& failures) {
  for (const ora::FrameFailure& f : failures) {
    std::cerr << "error: frame " << f.frame << ": " << f.message << "\n";
  }
  return failures.empty() ? kExitOk : kExitPartialFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-removal attack simulator and evaluation toolkit for "
               "KITTI-format LiDAR datasets"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  CommonFlags synth_flags;
  ora::SynthConfig synth_config;
  std::string synth_out;
  std::string density_mode = "distance";
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic dataset (velodyne/label_2/calib/split)");
  add_common_flags(synth, synth_flags);
  synth->add_option("--out", synth_out, "output dataset root")->required();
  synth->add_option("--frames", synth_config.num_frames, "number of frames");
  synth->add_option("--classes", synth_config.classes, "object classes");
  synth->add_option("--objects-min", synth_config.objects_min, "min objects");
  synth->add_option("--objects-max", synth_config.objects_max, "max objects");
  synth->add_option("--range-min", synth_config.range_min, "min range (m)");
  synth->add_option("--range-max", synth_config.range_max, "max range (m)");
  synth->add_option("--density-mode", density_mode,
                    "'distance' (points ~ constant/range) or 'uniform'");
  synth->add_option("--density-constant", synth_config.density_constant,
                    "points ~ constant / range");
  synth->add_option("--points-min", synth_config.points_min,
                    "uniform mode: min points per object");
  synth->add_option("--points-max", synth_config.points_max,
                    "uniform mode: max points per object");
  synth->add_option("--background-points", synth_config.background_points,
                    "ground returns per frame");

  // --- attack ----------------------------------------------------------------
  CommonFlags attack_flags;
  std::string attack_dataset, attack_split, attack_out;
  std::vector<int> attack_budgets;
  std::optional<double> sector_width_deg, dmin, dmax;
  std::vector<std::string> attack_classes;
  bool unsafe_budget = false;
  auto* attack = app.add_subcommand(
      "attack", "write perturbed clouds + manifests for each budget");
  add_common_flags(attack, attack_flags);
  attack->add_option("--dataset-root", attack_dataset,
                     "root with velodyne/, label_2/, calib/");
  attack->add_option("--split", attack_split, "split file of frame ids");
  attack->add_option("--out", attack_out, "output root");
  attack->add_option("--budgets", attack_budgets,
                     "point budgets, e.g. 10 20 40");
  attack->add_option("--sector-width-deg", sector_width_deg,
                     "spoofing horizontal angle in degrees");
  attack->add_option("--dmin", dmin, "min displacement distance (m)");
  attack->add_option("--dmax", dmax, "max displacement distance (m)");
  attack->add_option("--classes", attack_classes, "target classes");
  attack->add_flag("--unsafe-budget", unsafe_budget,
                   "allow budgets above the 200-point cap");

  // --- eval ------------------------------------------------------------------
  CommonFlags eval_flags;
  std::string eval_gt, eval_split, eval_det, eval_out, eval_budget_label = "na";
  std::string interpolation;
  auto* eval = app.add_subcommand(
      "eval", "evaluate KITTI detection files against ground truth");
  add_common_flags(eval, eval_flags);
  eval->add_option("--gt-root", eval_gt, "ground-truth root (label_2/, calib/)");
  eval->add_option("--split", eval_split, "split file of frame ids");
  eval->add_option("--det-root", eval_det, "directory of detection .txt files");
  eval->add_option("--out", eval_out, "report output directory");
  eval->add_option("--budget-label", eval_budget_label,
                   "budget column value for the emitted tables");
  eval->add_option("--interpolation", interpolation, "'11pt' or '40pt'");

  // --- proxy-sweep ----------------------------------------------------------
  CommonFlags sweep_flags;
  std::string sweep_dataset, sweep_split, sweep_out;
  std::vector<int> sweep_budgets;
  std::optional<int> tau;
  std::optional<double> score_scale;
  auto* sweep = app.add_subcommand(
      "proxy-sweep", "attack -> proxy detector -> evaluation per budget");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--dataset-root", sweep_dataset,
                    "root with velodyne/, label_2/, calib/");
  sweep->add_option("--split", sweep_split, "split file of frame ids");
  sweep->add_option("--out", sweep_out, "output root");
  sweep->add_option("--budgets", sweep_budgets, "point budgets (0 = clean)");
  sweep->add_option("--tau", tau, "proxy detection point threshold");
  sweep->add_option("--score-scale", score_scale, "proxy score normalizer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;  // help/version exit cleanly
  }

  try {
    if (synth->parsed()) {
      if (synth_flags.seed.has_value()) {
        synth_config.rng_seed = *synth_flags.seed;
      }
      if (density_mode == "distance") {
        synth_config.density = ora::SynthConfig::Density::kInverseRange;
      } else if (density_mode == "uniform") {
        synth_config.density = ora::SynthConfig::Density::kUniformCount;
      } else {
        throw ora::ConfigError("--density-mode must be 'distance' or "
                               "'uniform'");
      }
      ora::write_synth_dataset(synth_config, synth_out);
      std::cout << "synth: wrote " << synth_config.num_frames
                << " frames under " << synth_out << "\n";
      return kExitOk;
    }

    if (attack->parsed()) {
      ora::RunConfig config = load_config(attack_flags);
      if (!attack_dataset.empty()) config.dataset_root = attack_dataset;
      if (!attack_split.empty()) config.split_file = attack_split;
      if (!attack_out.empty()) config.output_root = attack_out;
      if (!attack_budgets.empty()) config.budgets = attack_budgets;
      if (sector_width_deg) {
        config.attack.sector_width = ora::deg2rad(*sector_width_deg);
      }
      if (dmin) config.attack.displacement_min = *dmin;
      if (dmax) config.attack.displacement_max = *dmax;
      if (!attack_classes.empty()) {
        config.attack.target_classes = {attack_classes.begin(),
                                        attack_classes.end()};
      }
      if (unsafe_budget) config.attack.allow_budget_above_cap = true;
      const ora::AttackRunSummary summary = ora::run_attack(config);
      std::cout << "attack: budgets=" << summary.budgets_run
                << " frames=" << summary.frames_attacked
                << " objects=" << summary.objects_attacked
                << " displaced_points=" << summary.points_displaced << "\n";
      return report_failures(summary.failures);
    }

    if (eval->parsed()) {
      ora::RunConfig config = load_config(eval_flags);
      if (!interpolation.empty()) {
        if (interpolation == "11pt") {
          config.metrics.interpolation = ora::Interpolation::kElevenPoint;
        } else if (interpolation == "40pt") {
          config.metrics.interpolation = ora::Interpolation::kFortyPoint;
        } else {
          throw ora::ConfigError("--interpolation must be '11pt' or '40pt'");
        }
      }
      const fs::path gt = eval_gt.empty() ? config.dataset_root
                                          : fs::path(eval_gt);
      const fs::path split = eval_split.empty() ? config.split_file
                                                : fs::path(eval_split);
      const fs::path out = eval_out.empty() ? config.output_root
                                            : fs::path(eval_out);
      if (gt.empty() || split.empty() || eval_det.empty() || out.empty()) {
        throw ora::ConfigError(
            "eval requires --gt-root, --split, --det-root and --out "
            "(or a config file providing them)");
      }
      const ora::EvaluationReport report =
          ora::run_eval(gt, split, eval_det, config, out, eval_budget_label);
      for (const auto& [class_name, class_eval] : report) {
        std::cout << "eval: " << class_name << " gts="
                  << class_eval.num_ground_truths
                  << " dets=" << class_eval.num_detections;
        for (const auto& [level, ap] : class_eval.ap) {
          std::cout << " " << ora::difficulty_name(level) << "=";
          if (ap.has_value()) {
            std::printf("%.2f", *ap);
          } else {
            std::cout << "-";
          }
        }
        std::cout << "\n";
      }
      return kExitOk;
    }

    if (sweep->parsed()) {
      ora::RunConfig config = load_config(sweep_flags);
      if (!sweep_dataset.empty()) config.dataset_root = sweep_dataset;
      if (!sweep_split.empty()) config.split_file = sweep_split;
      if (!sweep_out.empty()) config.output_root = sweep_out;
      if (!sweep_budgets.empty()) config.budgets = sweep_budgets;
      if (tau || score_scale) {
        ora::ProxyConfig proxy = config.proxy.value_or(ora::ProxyConfig{});
        if (tau) proxy.min_points = *tau;
        if (score_scale) proxy.score_scale = *score_scale;
        config.proxy = proxy;
      }
      const ora::ProxySweepResult result = ora::run_proxy_sweep(config);
      for (const auto& [budget, report] : result.by_budget) {
        for (const auto& [class_name, class_eval] : report) {
          if (!class_eval.recall_at_threshold.has_value()) continue;
          std::printf("proxy-sweep: budget=%d class=%s recall@%.2f=%.4f\n",
                      budget, class_name.c_str(), class_eval.iou_threshold,
                      *class_eval.recall_at_threshold);
        }
      }
      return report_failures(result.failures);
    }
  } catch (const ora::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
  return kExitUsage;
}
