#include "pointmine/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "pointmine/error.hpp"

namespace pointmine {

namespace fs = std::filesystem;

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers. The first
// exception is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<ClassRun> mine_all(const Dataset& train, const TrainConfig& cfg, unsigned threads) {
  const std::vector<int> classes = train.labels();
  std::vector<ClassRun> runs(classes.size());
  parallel_for(classes.size(), threads, [&](std::size_t i) {
    runs[i].action = classes[i];
    runs[i].mil = run_mil(train, classes[i], cfg);
  });
  return runs;
}

std::string selection_log(const Dataset& train, std::span<const ClassRun> runs) {
  std::string out = "class\tvideo_id\tproposal_id\tm\ts\to\tiou\n";
  for (const ClassRun& run : runs) {
    const MilResult& mil = run.mil;
    for (std::size_t i = 0; i < mil.candidates.size(); ++i) {
      const CandidateSet& set = mil.candidates[i];
      const VideoRecord& v = train.videos.at(set.video);
      const int id = mil.state.selected.at(v.id);
      const Tube& tube = id == kGroundTruthId ? v.gt_tubes.at(set.local.front())
                                               : v.proposals.at(set.local[mil.choice[i]]).tube;
      std::string m = "-", s = "-", o = "-";
      if (!v.points.empty()) {
        const OverlapScore score = overlap_measure(tube, v.points, v);
        m = fmt6(score.m);
        s = fmt6(score.s);
        o = fmt6(score.o);
      }
      out += std::to_string(run.action) + "\t" + v.id + "\t" + std::to_string(id) + "\t" + m + "\t" +
             s + "\t" + o + "\t" + fmt6(best_tube_iou(tube, v.gt_tubes)) + "\n";
    }
  }
  return out;
}

ExperimentResult run_experiment(const Dataset& train, const Dataset& test, const TrainConfig& cfg,
                                const EvalOptions& eval, unsigned threads) {
  if (train.feature_dim() != test.feature_dim()) {
    throw SchemaError("train and test features differ in dimension");
  }
  ExperimentResult result;
  result.runs = mine_all(train, cfg, threads);
  std::vector<int> classes;
  std::vector<LinearModel> models;
  for (const ClassRun& r : result.runs) {
    classes.push_back(r.action);
    models.push_back(r.mil.state.model);
  }
  result.report = evaluate(test, classes, models, eval);
  return result;
}

void write_models(std::span<const ClassRun> runs, const fs::path& dir) {
  fs::create_directories(dir);
  for (const ClassRun& r : runs) {
    char name[32];
    std::snprintf(name, sizeof name, "class_%03d.model", r.action);
    save_model(r.mil.state.model, r.action, dir / name);
  }
}

std::vector<std::pair<int, LinearModel>> load_models(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".model") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<int, LinearModel>> out;
  for (const fs::path& f : files) {
    int action = 0;
    LinearModel m = load_model(f, &action);
    out.emplace_back(action, std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  for (double t : spec.eval.thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw InvalidInput("IoU thresholds must lie in (0, 1)");
  }
  const Dataset train = load_dataset(spec.dataset_dir / "train");
  const Dataset test = load_dataset(spec.dataset_dir / "test");
  ExperimentResult result = run_experiment(train, test, spec.train, spec.eval, spec.threads);
  fs::create_directories(spec.output_dir);
  write_text_file(spec.output_dir / "report.csv", report_csv(result.report));
  write_text_file(spec.output_dir / "selections.tsv", selection_log(train, result.runs));
  write_models(result.runs, spec.output_dir / "models");
  return result;
}

std::vector<SweepRow> sweep_framerates(const Dataset& train, const Dataset& test,
                                       std::span<const int> rates, const TrainConfig& cfg,
                                       const EvalOptions& eval, const CostModel& cost,
                                       unsigned threads) {
  validate(cost);
  const auto has = [&](double t) {
    return std::any_of(eval.thresholds.begin(), eval.thresholds.end(),
                       [t](double x) { return std::abs(x - t) < 1e-12; });
  };
  if (!has(0.2) || !has(0.5)) throw InvalidInput("sweep needs thresholds 0.2 and 0.5");
  std::vector<int> sorted(rates.begin(), rates.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const WorldConfig world = world_config_from_entries(train.manifest.config);
  TrainConfig points_cfg = cfg;
  points_cfg.supervision = SupervisionMode::Points;

  std::vector<SweepRow> rows;
  for (int rate : sorted) {
    if (rate < 1) throw InvalidInput("annotation rate must be at least 1");
    Dataset annotated = train;
    resimulate_points(annotated, world, rate);
    const ExperimentResult r = run_experiment(annotated, test, points_cfg, eval, threads);
    rows.push_back(SweepRow{rate, annotation_cost(annotated, rate, cost, AnnotationScheme::Point).speedup,
                            r.report.map_at(0.2), r.report.map_at(0.5)});
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "rate,speedup,map_0.2,map_0.5\n";
  for (const SweepRow& r : rows) {
    out += std::to_string(r.rate) + "," + fmt6(r.speedup) + "," + fmt6(r.map_at_02) + "," +
           fmt6(r.map_at_05) + "\n";
  }
  return out;
}

}  // namespace pointmine
