#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pointmine/error.hpp"
#include "pointmine/pipeline.hpp"

namespace pointmine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "pointmine-dataset 1";
constexpr const char* kModelFormat = "pointmine-model 1";

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

void write_floats(std::ostream& out, const float* data, std::size_t n) {
  std::vector<std::uint32_t> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, data + i, sizeof bits);
    buf[i] = to_le(bits);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n * 4));
}

std::vector<float> read_floats(std::istream& in, std::size_t n, const std::string& what) {
  std::vector<std::uint32_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
  if (static_cast<std::size_t>(in.gcount()) != n * 4) {
    throw SchemaError(what + ": truncated, expected " + std::to_string(n * 4) + " bytes, found " +
                      std::to_string(in.gcount()));
  }
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = to_le(buf[i]);
    std::memcpy(&out[i], &bits, sizeof bits);
  }
  return out;
}

std::ofstream open_out(const fs::path& file, bool binary = false) {
  std::ofstream out(file, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file, bool binary = false) {
  std::ifstream in(file, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("cannot read " + file.string());
  return in;
}

json tube_json(const Tube& t) {
  json boxes = json::array();
  for (const BoundingBox& b : t.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
  return json{{"f", t.start_frame}, {"boxes", std::move(boxes)}};
}

Tube tube_from(const json& j) {
  Tube t;
  t.start_frame = j.at("f").get<int>();
  for (const json& b : j.at("boxes")) {
    if (b.size() != 4) throw ParseError("box needs four numbers");
    t.boxes.push_back(BoundingBox::make(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                        b[3].get<double>()));
  }
  return t;
}

json video_json(const VideoRecord& v) {
  json gts = json::array();
  for (const Tube& t : v.gt_tubes) gts.push_back(tube_json(t));
  json props = json::array();
  for (const Proposal& p : v.proposals) {
    json pj = tube_json(p.tube);
    pj["id"] = p.id;
    props.push_back(std::move(pj));
  }
  json tracks = json::array();
  for (const PointTrack& c : v.points) {
    json pts = json::array();
    for (const Point& p : c.points) pts.push_back({p.frame, p.x, p.y});
    tracks.push_back(std::move(pts));
  }
  return json{{"id", v.id},          {"label", v.label},  {"n_frames", v.n_frames},
              {"frame_w", v.frame_w}, {"frame_h", v.frame_h}, {"gt_tubes", std::move(gts)},
              {"proposals", std::move(props)}, {"points", std::move(tracks)}};
}

VideoRecord video_from(const json& j) {
  VideoRecord v;
  v.id = j.at("id").get<std::string>();
  v.label = j.at("label").get<int>();
  v.n_frames = j.at("n_frames").get<int>();
  v.frame_w = j.at("frame_w").get<double>();
  v.frame_h = j.at("frame_h").get<double>();
  for (const json& t : j.at("gt_tubes")) v.gt_tubes.push_back(tube_from(t));
  for (const json& p : j.at("proposals")) {
    v.proposals.push_back(Proposal{p.at("id").get<int>(), tube_from(p)});
  }
  for (const json& c : j.at("points")) {
    PointTrack track;
    for (const json& p : c) {
      if (p.size() != 3) throw ParseError("point needs [frame, x, y]");
      track.points.push_back(Point{p[0].get<int>(), p[1].get<double>(), p[2].get<double>()});
    }
    v.points.push_back(std::move(track));
  }
  validate_video(v);
  return v;
}

void save_store(const FeatureStore& store, const Dataset& d, const fs::path& dir,
                const std::string& stem, bool gt) {
  auto bin = open_out(dir / (stem + ".bin"), true);
  write_floats(bin, store.values().data(), store.values().size());
  auto idx = open_out(dir / (stem + ".idx"));
  std::size_t row = 0;
  for (const VideoRecord& v : d.videos) {
    const std::size_t n = gt ? v.gt_tubes.size() : v.proposals.size();
    for (std::size_t j = 0; j < n; ++j, ++row) {
      idx << v.id << ' ' << (gt ? static_cast<int>(j) : v.proposals[j].id) << ' ' << row << '\n';
    }
  }
}

FeatureStore load_store(const Dataset& d, std::size_t dim, const fs::path& dir,
                        const std::string& stem, bool gt) {
  std::size_t rows = 0;
  for (const VideoRecord& v : d.videos) rows += gt ? v.gt_tubes.size() : v.proposals.size();

  auto idx = open_in(dir / (stem + ".idx"));
  std::string line;
  std::size_t line_no = 0, row = 0;
  for (std::size_t vi = 0; vi < d.videos.size(); ++vi) {
    const VideoRecord& v = d.videos[vi];
    const std::size_t n = gt ? v.gt_tubes.size() : v.proposals.size();
    for (std::size_t j = 0; j < n; ++j, ++row) {
      ++line_no;
      if (!std::getline(idx, line)) {
        throw SchemaError(stem + ".idx: missing entry at line " + std::to_string(line_no));
      }
      std::istringstream ls(line);
      std::string vid;
      long long pid = 0, r = 0;
      if (!(ls >> vid >> pid >> r)) {
        throw ParseError(stem + ".idx:" + std::to_string(line_no) + ": expected 'video_id id row'");
      }
      const long long want = gt ? static_cast<long long>(j) : v.proposals[j].id;
      if (vid != v.id || pid != want || r != static_cast<long long>(row)) {
        throw SchemaError(stem + ".idx:" + std::to_string(line_no) + ": entry does not match records");
      }
    }
  }
  if (std::getline(idx, line) && !line.empty()) {
    throw SchemaError(stem + ".idx: more entries than records");
  }

  auto bin = open_in(dir / (stem + ".bin"), true);
  const std::vector<float> values = read_floats(bin, rows * dim, stem + ".bin");
  if (bin.peek() != std::char_traits<char>::eof()) {
    throw SchemaError(stem + ".bin: trailing bytes after " + std::to_string(rows) + " rows");
  }
  FeatureStore store(dim);
  std::size_t offset = 0;
  for (const VideoRecord& v : d.videos) {
    const std::size_t n = gt ? v.gt_tubes.size() : v.proposals.size();
    store.append_video(n, values.data() + offset * dim);
    offset += n;
  }
  return store;
}

}  // namespace

void save_dataset(const Dataset& d, const fs::path& dir) {
  validate_dataset(d);
  fs::create_directories(dir);
  {
    auto m = open_out(dir / "manifest.txt");
    m << "format " << kDatasetFormat << '\n'
      << "dataset_id " << d.manifest.dataset_id << '\n'
      << "split " << d.manifest.split << '\n'
      << "feature_dim " << d.feature_dim() << '\n'
      << "videos " << d.videos.size() << '\n'
      << "config_hash " << d.manifest.config_hash << '\n';
    for (const auto& [k, v] : d.manifest.config) m << "config." << k << ' ' << v << '\n';
  }
  {
    auto rec = open_out(dir / "videos.jsonl");
    for (const VideoRecord& v : d.videos) rec << video_json(v).dump() << '\n';
  }
  save_store(d.proposal_features, d, dir, "features", false);
  save_store(d.gt_features, d, dir, "gt_features", true);
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  std::size_t dim = 0, n_videos = 0;
  {
    auto m = open_in(dir / "manifest.txt");
    std::string line;
    std::size_t line_no = 0;
    bool format_ok = false;
    while (std::getline(m, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto sp = line.find(' ');
      if (sp == std::string::npos) {
        throw ParseError("manifest.txt:" + std::to_string(line_no) + ": expected 'key value'");
      }
      const std::string key = line.substr(0, sp);
      const std::string value = line.substr(sp + 1);
      try {
        if (key == "format") format_ok = value == kDatasetFormat;
        else if (key == "dataset_id") d.manifest.dataset_id = value;
        else if (key == "split") d.manifest.split = value;
        else if (key == "feature_dim") dim = std::stoul(value);
        else if (key == "videos") n_videos = std::stoul(value);
        else if (key == "config_hash") d.manifest.config_hash = value;
        else if (key.rfind("config.", 0) == 0) d.manifest.config.emplace_back(key.substr(7), value);
      } catch (const std::logic_error&) {
        throw ParseError("manifest.txt:" + std::to_string(line_no) + ": bad value for " + key);
      }
    }
    if (!format_ok) throw ParseError("manifest.txt: missing or unknown format line");
    if (config_hash(d.manifest.config) != d.manifest.config_hash) {
      throw SchemaError("manifest.txt: config hash does not match config entries");
    }
  }
  {
    auto rec = open_in(dir / "videos.jsonl");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(rec, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = "videos.jsonl:" + std::to_string(line_no);
      try {
        d.videos.push_back(video_from(json::parse(line)));
      } catch (const json::parse_error& e) {
        throw ParseError(where + ": byte " + std::to_string(e.byte) + ": " + e.what());
      } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
      } catch (const InvalidInput& e) {
        throw SchemaError(where + ": " + e.what());
      } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
      }
    }
  }
  if (d.videos.size() != n_videos) {
    throw SchemaError("videos.jsonl holds " + std::to_string(d.videos.size()) +
                      " records, manifest declares " + std::to_string(n_videos));
  }
  d.proposal_features = load_store(d, dim, dir, "features", false);
  d.gt_features = load_store(d, dim, dir, "gt_features", true);
  validate_dataset(d);
  return d;
}

void save_model(const LinearModel& m, int action, const fs::path& file) {
  auto out = open_out(file, true);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", m.lambda);
  out << kModelFormat << '\n' << "dim " << m.dim() << '\n' << "lambda " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", m.bias);
  out << "bias " << buf << '\n' << "class " << action << '\n' << "end\n";
  std::vector<float> w(m.weights.begin(), m.weights.end());
  write_floats(out, w.data(), w.size());
}

LinearModel load_model(const fs::path& file, int* action) {
  auto in = open_in(file, true);
  const std::string where = file.filename().string();
  std::string line;
  if (!std::getline(in, line) || line != kModelFormat) {
    throw ParseError(where + ":1: not a model file");
  }
  LinearModel m;
  std::size_t dim = 0;
  std::size_t line_no = 1;
  bool ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    bool ok = true;
    if (key == "dim") ok = static_cast<bool>(ls >> dim);
    else if (key == "lambda") ok = static_cast<bool>(ls >> m.lambda);
    else if (key == "bias") ok = static_cast<bool>(ls >> m.bias);
    else if (key == "class") {
      int a = 0;
      ok = static_cast<bool>(ls >> a);
      if (action) *action = a;
    }
    if (!ok) throw ParseError(where + ":" + std::to_string(line_no) + ": bad value for " + key);
  }
  if (!ended) throw ParseError(where + ": header has no 'end' line");
  const auto w = read_floats(in, dim, where);
  m.weights.assign(w.begin(), w.end());
  if (in.peek() != std::char_traits<char>::eof()) throw SchemaError(where + ": trailing bytes");
  return m;
}

void write_text_file(const fs::path& file, const std::string& text) {
  auto out = open_out(file, true);
  out << text;
}

}  // namespace pointmine
