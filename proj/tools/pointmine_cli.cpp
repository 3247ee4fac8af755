#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pointmine/error.hpp"
#include "pointmine/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pointmine;

namespace {

struct TrainFlags {
  std::string mode = "points";
  TrainConfig cfg;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--mode", f.mode, "points | label-only | best-iou | gt")->capture_default_str();
  app->add_option("--iterations", f.cfg.max_iterations, "Mining iterations")->capture_default_str();
  app->add_option("--folds", f.cfg.n_folds, "Re-localization folds")->capture_default_str();
  app->add_option("--negatives", f.cfg.negatives_per_video, "Negatives per other-class video")
      ->capture_default_str();
  app->add_option("--lambda", f.cfg.lambda, "SVM loss weight")->capture_default_str();
  app->add_option("--epochs", f.cfg.sgd_epochs, "SGD epochs per model")->capture_default_str();
}

TrainConfig finish(TrainFlags& f, std::uint64_t seed) {
  f.cfg.supervision = parse_supervision(f.mode);
  f.cfg.seed = seed;
  validate(f.cfg);
  return f.cfg;
}

void add_eval_flags(CLI::App* app, EvalOptions& e) {
  app->add_option("--thresholds", e.thresholds, "IoU thresholds")->delimiter(',');
  app->add_option("--top-k", e.top_k, "Proposals kept per test video")->capture_default_str();
  app->add_flag("--interpolated", e.interpolated_ap, "Interpolated precision in AP");
}

void check_thresholds(const EvalOptions& e) {
  for (double t : e.thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw InvalidInput("IoU thresholds must lie in (0, 1)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-supervised action proposal mining"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic world");
  WorldConfig world;
  std::uint64_t synth_seed = 0;
  fs::path synth_out;
  synth->add_option("--seed", synth_seed, "Root seed")->required();
  synth->add_option("--out", synth_out, "Output directory (train/ and test/ bundles)")->required();
  synth->add_option("--classes", world.n_classes)->capture_default_str();
  synth->add_option("--train-videos", world.train_videos_per_class, "Train videos per class")
      ->capture_default_str();
  synth->add_option("--test-videos", world.test_videos_per_class, "Test videos per class")
      ->capture_default_str();
  synth->add_option("--instances", world.instances_per_video)->capture_default_str();
  synth->add_option("--proposals", world.proposals_per_video)->capture_default_str();
  synth->add_option("--dim", world.feature_dim, "Feature dimension")->capture_default_str();
  synth->add_option("--noise", world.feature_noise, "Feature noise sigma")->capture_default_str();
  synth->add_option("--context", world.context_strength, "Scene context strength")
      ->capture_default_str();
  synth->add_option("--spatial-jitter", world.spatial_jitter)->capture_default_str();
  synth->add_option("--scale-jitter", world.scale_jitter)->capture_default_str();
  synth->add_option("--temporal-crop", world.temporal_crop)->capture_default_str();
  synth->add_option("--distractors", world.distractor_fraction, "Distractor share of the pool")
      ->capture_default_str();
  synth->add_option("--scene", world.scene_fraction, "Scene-tube share of the pool")
      ->capture_default_str();
  synth->add_option("--point-jitter", world.point_jitter)->capture_default_str();
  synth->add_option("--rate", world.annotation_rate, "Annotate every r-th frame")
      ->capture_default_str();

  // mine
  auto* mine = app.add_subcommand("mine", "Mine training proposals and fit one model per class");
  fs::path mine_data, mine_out;
  std::uint64_t mine_seed = 0;
  TrainFlags mine_flags;
  mine->add_option("--data", mine_data, "Train bundle directory")->required();
  mine->add_option("--out", mine_out, "Output directory")->required();
  mine->add_option("--seed", mine_seed)->capture_default_str();
  add_train_flags(mine, mine_flags);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a model directory on a test bundle");
  fs::path eval_data, eval_models, eval_out;
  EvalOptions eval_opts;
  eval->add_option("--data", eval_data, "Test bundle directory")->required();
  eval->add_option("--models", eval_models, "Directory of .model files")->required();
  eval->add_option("--out", eval_out, "Report CSV path");
  add_eval_flags(eval, eval_opts);

  // run
  auto* run = app.add_subcommand("run", "Mine, train and evaluate");
  ExperimentSpec spec;
  std::uint64_t run_seed = 0;
  TrainFlags run_flags;
  run->add_option("--data", spec.dataset_dir, "Directory holding train/ and test/")->required();
  run->add_option("--out", spec.output_dir, "Output directory")->required();
  run->add_option("--seed", run_seed)->required();
  add_train_flags(run, run_flags);
  add_eval_flags(run, spec.eval);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "mAP against annotation frame-rate");
  fs::path sweep_data, sweep_out;
  std::uint64_t sweep_seed = 0;
  std::vector<int> rates{1, 2, 5, 10, 25};
  TrainFlags sweep_flags;
  EvalOptions sweep_eval;
  CostModel cost;
  sweep->add_option("--data", sweep_data, "Directory holding train/ and test/")->required();
  sweep->add_option("--out", sweep_out, "Curve CSV path")->required();
  sweep->add_option("--seed", sweep_seed)->capture_default_str();
  sweep->add_option("--rates", rates)->delimiter(',');
  sweep->add_option("--box-seconds", cost.box_seconds_per_frame)->capture_default_str();
  sweep->add_option("--point-seconds", cost.point_seconds_per_frame)->capture_default_str();
  sweep->add_option("--label-seconds", cost.label_seconds_per_video)->capture_default_str();
  add_train_flags(sweep, sweep_flags);
  add_eval_flags(sweep, sweep_eval);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      world.seed = synth_seed;
      const World w = generate_world(world);
      save_dataset(w.train, synth_out / "train");
      save_dataset(w.test, synth_out / "test");
      std::printf("wrote %zu train and %zu test videos to %s\n", w.train.videos.size(),
                  w.test.videos.size(), synth_out.string().c_str());
    } else if (*mine) {
      const TrainConfig cfg = finish(mine_flags, mine_seed);
      const Dataset train = load_dataset(mine_data);
      const auto runs = mine_all(train, cfg, threads);
      fs::create_directories(mine_out);
      write_text_file(mine_out / "selections.tsv", selection_log(train, runs));
      write_models(runs, mine_out / "models");
      for (const ClassRun& r : runs) {
        for (const std::string& id : r.mil.dropped) {
          std::fprintf(stderr, "class %d: video %s has no admissible proposal\n", r.action,
                       id.c_str());
        }
      }
      std::printf("mined %zu classes into %s\n", runs.size(), mine_out.string().c_str());
    } else if (*eval) {
      check_thresholds(eval_opts);
      const Dataset test = load_dataset(eval_data);
      std::vector<int> classes;
      std::vector<LinearModel> models;
      for (auto& [action, m] : load_models(eval_models)) {
        classes.push_back(action);
        models.push_back(std::move(m));
      }
      if (models.empty()) throw InvalidInput("no .model files in " + eval_models.string());
      const EvalReport report = evaluate(test, classes, models, eval_opts);
      if (!eval_out.empty()) write_text_file(eval_out, report_csv(report));
      std::cout << report_table(report);
    } else if (*run) {
      spec.train = finish(run_flags, run_seed);
      spec.threads = threads;
      const ExperimentResult r = run_experiment(spec);
      std::cout << report_table(r.report);
    } else if (*sweep) {
      check_thresholds(sweep_eval);
      const TrainConfig cfg = finish(sweep_flags, sweep_seed);
      const Dataset train = load_dataset(sweep_data / "train");
      const Dataset test = load_dataset(sweep_data / "test");
      const auto rows = sweep_framerates(train, test, rates, cfg, sweep_eval, cost, threads);
      const std::string csv = sweep_csv(rows);
      write_text_file(sweep_out, csv);
      std::cout << csv;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
