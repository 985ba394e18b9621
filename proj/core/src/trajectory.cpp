#include "dynpl/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dynpl/sequence.hpp"
#include "dynpl/text.hpp"

namespace dynpl {

void write_tum(std::ostream& out, const Trajectory& trajectory) {
  for (const auto& s : trajectory) {
    const Vec3& t = s.world_from_camera.translation();
    const Eigen::Quaterniond q = s.world_from_camera.quaternion();
    out << format_double(s.timestamp);
    for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) out << ' ' << format_double(v);
    out << '\n';
  }
}

void write_tum_file(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_tum(out, trajectory);
}

Trajectory parse_tum(std::istream& in, const std::string& source) {
  Trajectory traj;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tok;
    std::vector<double> v;
    while (ss >> tok) {
      double d = 0.0;
      if (!parse_double(tok, d)) {
        throw InputError(InputErrorKind::malformed_trajectory, source, number, "unparsable value '" + tok + "'");
      }
      v.push_back(d);
    }
    if (v.empty()) continue;
    if (v.size() != 8) {
      throw InputError(InputErrorKind::malformed_trajectory, source, number,
                       "expected 'timestamp tx ty tz qx qy qz qw'");
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-12)) {
      throw InputError(InputErrorKind::malformed_trajectory, source, number, "zero quaternion");
    }
    traj.push_back({v[0], PoseSE3::from_quaternion(q.normalized(), {v[1], v[2], v[3]})});
  }
  return traj;
}

Trajectory read_tum_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(InputErrorKind::missing_path, path.string(), 0, "cannot open trajectory");
  return parse_tum(in, path.string());
}

TrajectoryMetrics evaluate_trajectory(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) {
    throw InputError(InputErrorKind::trajectory_mismatch, "trajectory", 0,
                     "length mismatch: " + std::to_string(est.size()) + " vs " + std::to_string(gt.size()));
  }
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (std::abs(est[k].timestamp - gt[k].timestamp) > kTimestampTolerance) {
      throw InputError(InputErrorKind::trajectory_mismatch, "trajectory", static_cast<int>(k + 1),
                       "timestamp mismatch at pose " + std::to_string(k));
    }
  }
  TrajectoryMetrics m;
  if (est.empty()) return m;
  const PoseSE3 align = gt.front().world_from_camera * est.front().world_from_camera.inverse();
  double sum_t = 0.0;
  double sum_r = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const PoseSE3 a = align * est[k].world_from_camera;
    const double et = (a.translation() - gt[k].world_from_camera.translation()).norm();
    const double er =
        rotation_angle_between(a.rotation(), gt[k].world_from_camera.rotation()) * 180.0 / std::numbers::pi;
    m.translation_errors.push_back(et);
    m.rotation_errors_deg.push_back(er);
    if (k == 0) continue;
    sum_t += et * et;
    sum_r += er * er;
  }
  if (est.size() > 1) {
    const double n = static_cast<double>(est.size() - 1);
    m.ate_rmse = std::sqrt(sum_t / n);
    m.rotation_rmse_deg = std::sqrt(sum_r / n);
  }
  return m;
}

}  // namespace dynpl
