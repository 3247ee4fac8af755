#include "pointmine/dataset.hpp"

#include <algorithm>
#include <set>

#include "pointmine/error.hpp"

namespace pointmine {

void FeatureStore::append_video(const std::vector<FeatureVector>& rows) {
  for (const FeatureVector& r : rows) {
    if (r.size() != dim_) throw SchemaError("feature row has wrong dimension");
    values_.insert(values_.end(), r.begin(), r.end());
  }
  offsets_.push_back(offsets_.back() + rows.size());
}

void FeatureStore::append_video(std::size_t n_rows, const float* data) {
  values_.insert(values_.end(), data, data + n_rows * dim_);
  offsets_.push_back(offsets_.back() + n_rows);
}

std::string Manifest::get(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : config) {
    if (k == key) return v;
  }
  return fallback;
}

std::vector<int> Dataset::labels() const {
  std::set<int> s;
  for (const VideoRecord& v : videos) s.insert(v.label);
  return {s.begin(), s.end()};
}

void validate_dataset(const Dataset& d) {
  if (d.proposal_features.n_videos() != d.videos.size() ||
      d.gt_features.n_videos() != d.videos.size()) {
    throw SchemaError("feature store does not cover every video");
  }
  if (d.gt_features.dim() != d.proposal_features.dim()) {
    throw SchemaError("ground-truth and proposal features differ in dimension");
  }
  for (std::size_t i = 0; i < d.videos.size(); ++i) {
    const VideoRecord& v = d.videos[i];
    if (d.proposal_features.rows_of(i) != v.proposals.size()) {
      throw SchemaError(v.id + ": proposal feature rows do not match proposals");
    }
    if (d.gt_features.rows_of(i) != v.gt_tubes.size()) {
      throw SchemaError(v.id + ": ground-truth feature rows do not match tubes");
    }
    if (i > 0 && !(d.videos[i - 1].id < v.id)) {
      throw SchemaError("video ids must be unique and sorted");
    }
    for (std::size_t j = 1; j < v.proposals.size(); ++j) {
      if (v.proposals[j].id <= v.proposals[j - 1].id) {
        throw SchemaError(v.id + ": proposal ids must be strictly increasing");
      }
    }
  }
}

}  // namespace pointmine
