#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pointmine/classifier.hpp"
#include "pointmine/geometry.hpp"

namespace pointmine {

/// Dense row-major float matrix, grouped by video. Row r of video v holds the
/// embedding of the v-th video's r-th tube (proposals or ground truths, in
/// record order).
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_videos() const noexcept { return offsets_.size() - 1; }
  std::size_t n_rows() const noexcept { return offsets_.back(); }
  std::size_t rows_of(std::size_t video) const { return offsets_.at(video + 1) - offsets_.at(video); }
  std::size_t row_index(std::size_t video, std::size_t local) const { return offsets_.at(video) + local; }

  FeatureView row(std::size_t video, std::size_t local) const {
    return FeatureView(values_.data() + row_index(video, local) * dim_, dim_);
  }
  FeatureView row(std::size_t global) const { return FeatureView(values_.data() + global * dim_, dim_); }

  /// Appends the rows of the next video.
  void append_video(const std::vector<FeatureVector>& rows);
  /// Appends a video with `n_rows` rows taken from a flat buffer.
  void append_video(std::size_t n_rows, const float* data);

  const std::vector<float>& values() const noexcept { return values_; }
  friend bool operator==(const FeatureStore&, const FeatureStore&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::size_t> offsets_{0};
};

/// Free-form key/value header of a dataset bundle.
struct Manifest {
  std::string dataset_id;
  std::string split;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> config;

  /// Value stored under `key` in config, or `fallback`.
  std::string get(const std::string& key, const std::string& fallback = "") const;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Videos of one split together with the embeddings of their proposals and
/// ground-truth tubes.
struct Dataset {
  Manifest manifest;
  std::vector<VideoRecord> videos;
  FeatureStore proposal_features;
  FeatureStore gt_features;

  std::size_t feature_dim() const noexcept { return proposal_features.dim(); }
  /// Sorted distinct labels present in the split.
  std::vector<int> labels() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws SchemaError when row counts or dimensions disagree with the records.
void validate_dataset(const Dataset& d);

}  // namespace pointmine
