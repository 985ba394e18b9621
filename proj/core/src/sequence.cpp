#include "dynpl/sequence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dynpl/text.hpp"

namespace fs = std::filesystem;

namespace dynpl {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view strip_comment(std::string_view s) {
  const auto hash = s.find('#');
  return hash == std::string_view::npos ? s : s.substr(0, hash);
}

struct Header {
  std::size_t index = 0;
  double timestamp = 0.0;
};

Header parse_header(const std::vector<std::string_view>& tok, const std::string& source, int line) {
  Header h;
  if (tok.size() != 3 || tok[0] != "frame" || !parse_int(tok[1], h.index) || !parse_double(tok[2], h.timestamp)) {
    throw InputError(InputErrorKind::malformed_feature_line, source, line,
                     "expected header 'frame <index> <timestamp>'");
  }
  return h;
}

// First header of a feature file, without parsing the body.
Header read_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(InputErrorKind::missing_path, path.string(), 0, "cannot open feature file");
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    return parse_header(tok, path.string(), number);
  }
  throw InputError(InputErrorKind::malformed_feature_line, path.string(), number, "missing frame header");
}

const char* label_name(FeatureLabel l) {
  switch (l) {
    case FeatureLabel::static_feature:
      return "static";
    case FeatureLabel::dynamic_feature:
      return "dynamic";
    case FeatureLabel::outlier:
      return "outlier";
  }
  return "static";
}

}  // namespace

const char* to_string(InputErrorKind kind) {
  switch (kind) {
    case InputErrorKind::missing_path:
      return "missing_path";
    case InputErrorKind::missing_calibration:
      return "missing_calibration";
    case InputErrorKind::malformed_calibration:
      return "malformed_calibration";
    case InputErrorKind::malformed_feature_line:
      return "malformed_feature_line";
    case InputErrorKind::non_monotone_index:
      return "non_monotone_index";
    case InputErrorKind::malformed_labels:
      return "malformed_labels";
    case InputErrorKind::malformed_trajectory:
      return "malformed_trajectory";
    case InputErrorKind::trajectory_mismatch:
      return "trajectory_mismatch";
  }
  return "unknown";
}

namespace {

std::string describe(InputErrorKind kind, const std::string& source, int line, const std::string& message) {
  std::string s = source;
  if (line > 0) s += ":" + std::to_string(line);
  return s + ": " + to_string(kind) + ": " + message;
}

}  // namespace

InputError::InputError(InputErrorKind kind, const std::string& source, int line, const std::string& message)
    : std::runtime_error(describe(kind, source, line, message)), kind_(kind), source_(source), line_(line) {}

StereoCamera read_calibration(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(InputErrorKind::missing_calibration, path.string(), 0, "calibration file not found");
  std::vector<double> values;
  std::string line;
  int number = 0;
  std::optional<std::pair<int, int>> size;
  while (std::getline(in, line)) {
    ++number;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    if (values.size() < 5) {
      double v = 0.0;
      if (tok.size() != 1 || !parse_double(tok[0], v)) {
        throw InputError(InputErrorKind::malformed_calibration, path.string(), number, "expected one number");
      }
      values.push_back(v);
      continue;
    }
    int w = 0;
    int h = 0;
    if (size || tok.size() != 2 || !parse_int(tok[0], w) || !parse_int(tok[1], h)) {
      throw InputError(InputErrorKind::malformed_calibration, path.string(), number,
                       "expected 'width height' after the five intrinsics");
    }
    size = std::make_pair(w, h);
  }
  if (values.size() < 5) {
    throw InputError(InputErrorKind::malformed_calibration, path.string(), number,
                     "expected fx fy cx cy baseline");
  }
  StereoCamera cam{values[0], values[1], values[2], values[3], values[4], 1242, 376};
  if (size) {
    cam.width = size->first;
    cam.height = size->second;
  }
  try {
    cam.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(InputErrorKind::malformed_calibration, path.string(), 0, e.what());
  }
  return cam;
}

void write_calibration(const fs::path& path, const StereoCamera& cam) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_double(cam.fx) << '\n'
      << format_double(cam.fy) << '\n'
      << format_double(cam.cx) << '\n'
      << format_double(cam.cy) << '\n'
      << format_double(cam.baseline) << '\n'
      << cam.width << ' ' << cam.height << '\n';
}

StereoFrame parse_features(std::istream& in, const std::string& source) {
  StereoFrame frame;
  bool have_header = false;
  std::string line;
  int number = 0;
  auto fail = [&](const std::string& msg) {
    throw InputError(InputErrorKind::malformed_feature_line, source, number, msg);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    if (!have_header) {
      const Header h = parse_header(tok, source, number);
      frame.index = h.index;
      frame.timestamp = h.timestamp;
      have_header = true;
      continue;
    }
    if (tok[0] == "P") {
      if (tok.size() != 6) fail("point line needs 5 fields: id uL vL uR vR");
      PointFeature2D p;
      double ur = 0.0;
      if (!parse_int(tok[1], p.id) || !parse_double(tok[2], p.u) || !parse_double(tok[3], p.v) ||
          !parse_double(tok[4], ur)) {
        fail("unparsable point field");
      }
      double vr = 0.0;
      if (!parse_double(tok[5], vr)) fail("unparsable point field");
      if (ur >= 0.0) p.disparity = p.u - ur;
      frame.points.push_back(p);
    } else if (tok[0] == "L") {
      if (tok.size() != 10) fail("line needs 9 fields: id sxL syL exL eyL sxR syR exR eyR");
      StereoLineFeature l;
      double v[8];
      if (!parse_int(tok[1], l.left.id)) fail("unparsable line id");
      for (int k = 0; k < 8; ++k) {
        if (!parse_double(tok[2 + k], v[k])) fail("unparsable line field");
      }
      l.left.start = {v[0], v[1]};
      l.left.end = {v[2], v[3]};
      if (v[4] >= 0.0) l.right = LineFeature2D{l.left.id, {v[4], v[5]}, {v[6], v[7]}};
      frame.lines.push_back(l);
    } else {
      fail("unknown record '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_header) {
    throw InputError(InputErrorKind::malformed_feature_line, source, number, "missing frame header");
  }
  return frame;
}

StereoFrame read_feature_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(InputErrorKind::missing_path, path.string(), 0, "cannot open feature file");
  return parse_features(in, path.string());
}

void write_features(std::ostream& out, const StereoFrame& frame) {
  out << "frame " << frame.index << ' ' << format_double(frame.timestamp) << '\n';
  for (const auto& p : frame.points) {
    out << "P " << p.id << ' ' << format_double(p.u) << ' ' << format_double(p.v) << ' ';
    if (p.disparity) {
      out << format_double(p.u - *p.disparity) << ' ' << format_double(p.v);
    } else {
      out << "-1 -1";
    }
    out << '\n';
  }
  for (const auto& l : frame.lines) {
    out << "L " << l.left.id;
    for (double v : {l.left.start.x(), l.left.start.y(), l.left.end.x(), l.left.end.y()}) {
      out << ' ' << format_double(v);
    }
    if (l.right) {
      for (double v : {l.right->start.x(), l.right->start.y(), l.right->end.x(), l.right->end.y()}) {
        out << ' ' << format_double(v);
      }
    } else {
      out << " -1 -1 -1 -1";
    }
    out << '\n';
  }
}

void write_feature_file(const fs::path& path, const StereoFrame& frame) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_features(out, frame);
}

FrameLabels read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(InputErrorKind::missing_path, path.string(), 0, "cannot open label file");
  FrameLabels labels;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    FeatureId id = 0;
    if (tok.size() != 3 || (tok[0] != "P" && tok[0] != "L") || !parse_int(tok[1], id)) {
      throw InputError(InputErrorKind::malformed_labels, path.string(), number, "expected 'P|L id label'");
    }
    FeatureLabel l;
    if (tok[2] == "static") {
      l = FeatureLabel::static_feature;
    } else if (tok[2] == "dynamic") {
      l = FeatureLabel::dynamic_feature;
    } else if (tok[2] == "outlier") {
      l = FeatureLabel::outlier;
    } else {
      throw InputError(InputErrorKind::malformed_labels, path.string(), number, "unknown label");
    }
    (tok[0] == "P" ? labels.points : labels.lines)[id] = l;
  }
  return labels;
}

void write_labels(const fs::path& path, const FrameLabels& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [id, l] : labels.points) out << "P " << id << ' ' << label_name(l) << '\n';
  for (const auto& [id, l] : labels.lines) out << "L " << id << ' ' << label_name(l) << '\n';
}

std::string frame_file_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

Sequence Sequence::open(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw InputError(InputErrorKind::missing_path, root.string(), 0, "sequence directory not found");
  }
  Sequence seq;
  seq.root_ = root;
  const fs::path calib = root / "calib.txt";
  if (!fs::exists(calib)) {
    throw InputError(InputErrorKind::missing_calibration, calib.string(), 0, "calibration file not found");
  }
  seq.cam_ = read_calibration(calib);

  std::vector<fs::path> files;
  const fs::path features = root / "features";
  const fs::path images = root / "image_0";
  if (fs::is_directory(features)) {
    seq.kind_ = Kind::feature_files;
    for (const auto& e : fs::directory_iterator(features)) {
      if (e.is_regular_file() && e.path().extension() == ".feat") files.push_back(e.path());
    }
  } else if (fs::is_directory(images)) {
    seq.kind_ = Kind::image_directory;
    for (const auto& e : fs::directory_iterator(images)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) files.push_back(e.path());
    }
  } else {
    throw InputError(InputErrorKind::missing_path, root.string(), 0, "no features/ or image_0/ directory");
  }
  std::sort(files.begin(), files.end());

  std::vector<double> times;
  if (seq.kind_ == Kind::image_directory) {
    std::ifstream tin(root / "times.txt");
    double t = 0.0;
    while (tin >> t) times.push_back(t);
  }

  std::optional<std::size_t> last;
  for (std::size_t k = 0; k < files.size(); ++k) {
    Entry e;
    e.stem = files[k].stem().string();
    if (seq.kind_ == Kind::feature_files) {
      const Header h = read_header(files[k]);
      e.index = h.index;
      e.timestamp = h.timestamp;
    } else {
      if (!parse_int(e.stem, e.index)) e.index = k;
      e.timestamp = k < times.size() ? times[k] : static_cast<double>(k);
    }
    if (last && e.index <= *last) {
      throw InputError(InputErrorKind::non_monotone_index, files[k].string(), 1,
                       "frame index " + std::to_string(e.index) + " does not increase");
    }
    last = e.index;
    seq.entries_.push_back(std::move(e));
  }
  return seq;
}

StereoFrame Sequence::frame(std::size_t i) const {
  const Entry& e = entries_.at(i);
  if (kind_ == Kind::image_directory) {
    StereoFrame f;
    f.index = e.index;
    f.timestamp = e.timestamp;
    return f;
  }
  return read_feature_file(root_ / "features" / (e.stem + ".feat"));
}

bool Sequence::has_images() const { return fs::is_directory(root_ / "image_0"); }

std::optional<fs::path> Sequence::left_image_path(std::size_t i) const {
  const Entry& e = entries_.at(i);
  for (const char* ext : {".pgm", ".png"}) {
    fs::path p = root_ / "image_0" / (e.stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

std::optional<GrayImage> Sequence::left_image(std::size_t i) const {
  const auto p = left_image_path(i);
  if (!p) return std::nullopt;
  return read_image(*p);
}

std::optional<FrameLabels> Sequence::labels(std::size_t i) const {
  const fs::path p = root_ / "labels" / (entries_.at(i).stem + ".gt");
  if (!fs::exists(p)) return std::nullopt;
  return read_labels(p);
}

std::optional<fs::path> Sequence::groundtruth_path() const {
  const fs::path p = root_ / "groundtruth.txt";
  if (fs::exists(p)) return p;
  return std::nullopt;
}

}  // namespace dynpl
