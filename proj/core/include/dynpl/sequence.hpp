#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynpl/frame.hpp"
#include "dynpl/image.hpp"

namespace dynpl {

enum class InputErrorKind {
  missing_path,
  missing_calibration,
  malformed_calibration,
  malformed_feature_line,
  non_monotone_index,
  malformed_labels,
  malformed_trajectory,
  trajectory_mismatch,
};

const char* to_string(InputErrorKind kind);

class InputError : public std::runtime_error {
 public:
  InputError(InputErrorKind kind, const std::string& source, int line, const std::string& message);

  InputErrorKind kind() const { return kind_; }
  const std::string& source() const { return source_; }
  int line() const { return line_; }  // 0 when not line specific

 private:
  InputErrorKind kind_;
  std::string source_;
  int line_;
};

/// `fx`, `fy`, `cx`, `cy`, `baseline` on five lines, optionally followed by
/// a `width height` line (defaults 1242 376).
StereoCamera read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, const StereoCamera& cam);

/// Feature file: header `frame <index> <timestamp>`, then
/// `P id uL vL uR vR` (uR = -1 when unmatched) and
/// `L id sxL syL exL eyL sxR syR exR eyR` (sxR < 0 when unmatched).
StereoFrame parse_features(std::istream& in, const std::string& source);
StereoFrame read_feature_file(const std::filesystem::path& path);
void write_features(std::ostream& out, const StereoFrame& frame);
void write_feature_file(const std::filesystem::path& path, const StereoFrame& frame);

enum class FeatureLabel { static_feature, dynamic_feature, outlier };

struct FrameLabels {
  std::map<FeatureId, FeatureLabel> points;
  std::map<FeatureId, FeatureLabel> lines;
};

/// Ground-truth sidecar lines `P|L id static|dynamic|outlier`.
FrameLabels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const FrameLabels& labels);

std::string frame_file_stem(std::size_t index);

/// Directory layout: calib.txt, features/NNNNNN.feat, image_0/NNNNNN.{pgm,png}
/// (left), image_1/ (right), optional groundtruth.txt and labels/.
class Sequence {
 public:
  enum class Kind { feature_files, image_directory };

  /// Validates the calibration and the frame index order up front; frame
  /// contents are parsed on access.
  static Sequence open(const std::filesystem::path& root);

  Kind kind() const { return kind_; }
  const std::filesystem::path& root() const { return root_; }
  const StereoCamera& camera() const { return cam_; }
  std::size_t size() const { return entries_.size(); }
  double timestamp(std::size_t i) const { return entries_.at(i).timestamp; }
  std::size_t frame_index(std::size_t i) const { return entries_.at(i).index; }

  StereoFrame frame(std::size_t i) const;
  bool has_images() const;
  std::optional<GrayImage> left_image(std::size_t i) const;
  std::optional<std::filesystem::path> left_image_path(std::size_t i) const;
  std::optional<FrameLabels> labels(std::size_t i) const;
  std::optional<std::filesystem::path> groundtruth_path() const;

 private:
  struct Entry {
    std::size_t index = 0;
    double timestamp = 0.0;
    std::string stem;
  };
  Kind kind_ = Kind::feature_files;
  std::filesystem::path root_;
  StereoCamera cam_;
  std::vector<Entry> entries_;
};

inline Sequence load_sequence(const std::filesystem::path& root) { return Sequence::open(root); }

}  // namespace dynpl
