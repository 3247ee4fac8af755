#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pointmine/dataset.hpp"
#include "pointmine/evaluation.hpp"
#include "pointmine/mining.hpp"
#include "pointmine/synthworld.hpp"

namespace pointmine {

// Dataset directory layout:
//   manifest.txt      "key value" lines; world settings carry a "config." prefix
//   videos.jsonl      one JSON object per video, sorted by id
//   features.bin      little-endian float32 rows, ordered by (video id, proposal id)
//   features.idx      "video_id proposal_id row" lines
//   gt_features.bin   same convention for ground-truth tubes
//   gt_features.idx   "video_id gt_index row" lines

void save_dataset(const Dataset& d, const std::filesystem::path& dir);
/// Throws ParseError (naming file and line or byte offset) on malformed text
/// and SchemaError on inconsistent sizes, ids or config hash.
Dataset load_dataset(const std::filesystem::path& dir);

/// Model file: text header ("pointmine-model 1", dim, lambda, bias, class,
/// "end") followed by `dim` little-endian float32 weights.
void save_model(const LinearModel& m, int action, const std::filesystem::path& file);
LinearModel load_model(const std::filesystem::path& file, int* action = nullptr);

struct ClassRun {
  int action = 0;
  MilResult mil;
};

/// run_mil for every class of the split. Classes are processed on up to
/// `threads` workers (0 = hardware concurrency); results do not depend on it.
std::vector<ClassRun> mine_all(const Dataset& train, const TrainConfig& cfg, unsigned threads = 0);

/// Tab-separated log of the final training selections: class, video id,
/// proposal id (-1 for a ground-truth tube), M, S, O and IoU with the ground
/// truth. M, S and O are "-" for videos without points.
std::string selection_log(const Dataset& train, std::span<const ClassRun> runs);

struct ExperimentResult {
  std::vector<ClassRun> runs;
  EvalReport report;
};

ExperimentResult run_experiment(const Dataset& train, const Dataset& test, const TrainConfig& cfg,
                                const EvalOptions& eval, unsigned threads = 0);

struct ExperimentSpec {
  std::filesystem::path dataset_dir;  // holds train/ and test/ bundles
  TrainConfig train;
  EvalOptions eval;
  std::filesystem::path output_dir;
  unsigned threads = 0;
};

/// Loads the bundles, runs the experiment and writes report.csv,
/// selections.tsv and models/class_<k>.model under spec.output_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_models(std::span<const ClassRun> runs, const std::filesystem::path& dir);
std::vector<std::pair<int, LinearModel>> load_models(const std::filesystem::path& dir);

struct SweepRow {
  int rate = 1;
  double speedup = 1.0;
  double map_at_02 = 0.0;
  double map_at_05 = 0.0;
};

/// One Points-mode experiment per annotation rate with freshly simulated
/// points; rows sorted by ascending rate. `eval.thresholds` must contain 0.2
/// and 0.5.
std::vector<SweepRow> sweep_framerates(const Dataset& train, const Dataset& test,
                                       std::span<const int> rates, const TrainConfig& cfg,
                                       const EvalOptions& eval, const CostModel& cost,
                                       unsigned threads = 0);

/// Header `rate,speedup,map_0.2,map_0.5`.
std::string sweep_csv(std::span<const SweepRow> rows);

void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace pointmine
