#include "dynpl/bundle_adjustment.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "dynpl/pose_estimation.hpp"

namespace dynpl {

namespace {

constexpr double kMaxLambda = 1e12;

template <int K>
struct LandmarkBlock {
  using MatK = Eigen::Matrix<double, K, K>;
  using VecK = Eigen::Matrix<double, K, 1>;
  using Mat6K = Eigen::Matrix<double, 6, K>;

  MatK H = MatK::Zero();
  VecK g = VecK::Zero();
  std::vector<std::pair<int, Mat6K>> coupling;  // (free pose index, H_pose_landmark)
  MatK damped_inverse = MatK::Zero();

  Mat6K& coupling_for(int pose) {
    for (auto& [p, m] : coupling) {
      if (p == pose) return m;
    }
    coupling.emplace_back(pose, Mat6K::Zero());
    return coupling.back().second;
  }
};

struct Linearization {
  double cost = 0.0;
  Eigen::MatrixXd Hpp;
  Eigen::VectorXd gp;
  std::vector<LandmarkBlock<3>> points;
  std::vector<LandmarkBlock<6>> lines;
};

class Evaluator {
 public:
  Evaluator(const BAProblem& problem, const StereoCamera& cam, const BAOptions& options)
      : cam_(cam),
        options_(options),
        right_from_left_(Mat3::Identity(), Vec3(-cam.baseline, 0.0, 0.0)),
        right_adjoint_(right_from_left_.adjoint()),
        free_index_(problem.poses.size(), -1) {
    for (std::size_t i = 0; i < problem.poses.size(); ++i) {
      const bool fixed = i < problem.pose_fixed.size() && problem.pose_fixed[i];
      if (!fixed) free_index_[i] = free_count_++;
    }
  }

  int free_count() const { return free_count_; }
  int free_index(std::size_t pose) const { return free_index_[pose]; }

  // Visits every residual block: f(r, J_pose, J_landmark, pose, landmark).
  template <typename F>
  void for_each_block(const BAProblem& p, F&& f) const {
    for (const auto& o : p.point_observations) {
      const PoseSE3& T = p.poses[o.pose];
      const Vec3& X = p.points[o.landmark];
      if (auto r = point_residual(X, o.px, T, cam_)) f(r->value, r->d_pose, r->d_point, o.pose, o.landmark);
      if (o.right_u) {
        if (auto r = right_point_residual(X, *o.right_u, T, cam_)) {
          f(Eigen::Matrix<double, 1, 1>(r->value), r->d_pose, r->d_point, o.pose, o.landmark);
        }
      }
    }
    for (const auto& o : p.line_observations) {
      const PoseSE3& T = p.poses[o.pose];
      const Landmark3D& L = p.lines[o.landmark];
      if (auto r = line_vertical_residual(L, o.observed, T, cam_)) {
        f(r->value, r->d_pose, r->d_line, o.pose, o.landmark);
      }
      if (o.right) {
        // Right camera: T_r = S T with S a shift by the baseline, so a left
        // perturbation of T maps through Ad(S).
        const PoseSE3 T_r = right_from_left_ * T;
        if (auto r = line_vertical_residual(L, *o.right, T_r, cam_)) {
          f(r->value, Eigen::Matrix<double, 2, 6>(r->d_pose * right_adjoint_), r->d_line, o.pose, o.landmark);
        }
        if (options_.use_horizontal) {
          if (auto r = line_horizontal_residual(L, *o.right, T_r, cam_, options_.edge_margin)) {
            f(Eigen::Matrix<double, 1, 1>(r->value), Eigen::Matrix<double, 1, 6>(r->d_pose * right_adjoint_),
              r->d_line, o.pose, o.landmark);
          }
        }
      }
      if (!options_.use_horizontal) continue;
      if (auto r = line_horizontal_residual(L, o.observed, T, cam_, options_.edge_margin)) {
        f(Eigen::Matrix<double, 1, 1>(r->value), r->d_pose, r->d_line, o.pose, o.landmark);
      }
    }
  }

  double robust_cost(double s) const { return options_.robust ? huber_cost(s, options_.huber_delta) : s; }
  double robust_weight(double s) const {
    return options_.robust ? huber_weight(s, options_.huber_delta) : 1.0;
  }

  double cost(const BAProblem& p) const {
    double c = 0.0;
    for_each_block(p, [&](const auto& r, const auto&, const auto&, std::size_t, std::size_t) {
      c += robust_cost(r.squaredNorm());
    });
    return c;
  }

  Linearization linearize(const BAProblem& p) const {
    Linearization lin;
    lin.Hpp = Eigen::MatrixXd::Zero(6 * free_count_, 6 * free_count_);
    lin.gp = Eigen::VectorXd::Zero(6 * free_count_);
    lin.points.resize(p.points.size());
    lin.lines.resize(p.lines.size());
    for_each_block(p, [&](const auto& r, const auto& jp, const auto& jl, std::size_t pose, std::size_t lm) {
      constexpr int K = std::decay_t<decltype(jl)>::ColsAtCompileTime;
      const double s = r.squaredNorm();
      lin.cost += robust_cost(s);
      const double w = robust_weight(s);
      auto& blk = [&]() -> auto& {
        if constexpr (K == 3) {
          return lin.points[lm];
        } else {
          return lin.lines[lm];
        }
      }();
      blk.H.noalias() += w * jl.transpose() * jl;
      blk.g.noalias() += w * jl.transpose() * r;
      const int fi = free_index_[pose];
      if (fi < 0) return;
      lin.Hpp.template block<6, 6>(6 * fi, 6 * fi).noalias() += w * jp.transpose() * jp;
      lin.gp.template segment<6>(6 * fi).noalias() += w * jp.transpose() * r;
      blk.coupling_for(fi).noalias() += w * jp.transpose() * jl;
    });
    return lin;
  }

 private:
  const StereoCamera& cam_;
  const BAOptions& options_;
  PoseSE3 right_from_left_;
  Mat6 right_adjoint_;
  std::vector<int> free_index_;
  int free_count_ = 0;
};

struct Step {
  Eigen::VectorXd poses;
  std::vector<Vec3> points;
  std::vector<Vec6> lines;
  double norm_sq = 0.0;
};

template <int K>
bool eliminate(LandmarkBlock<K>& blk, double lambda, double mu, Eigen::MatrixXd& S, Eigen::VectorXd& rhs) {
  using MatK = typename LandmarkBlock<K>::MatK;
  MatK A = blk.H;
  A.diagonal() += lambda * blk.H.diagonal() + MatK::Identity().diagonal() * mu;
  Eigen::FullPivLU<MatK> lu(A);
  if (!lu.isInvertible()) return false;
  blk.damped_inverse = lu.inverse();
  for (const auto& [a, ha] : blk.coupling) {
    const Eigen::Matrix<double, 6, K> ha_ainv = ha * blk.damped_inverse;
    rhs.template segment<6>(6 * a).noalias() += ha_ainv * blk.g;
    for (const auto& [b, hb] : blk.coupling) {
      S.template block<6, 6>(6 * a, 6 * b).noalias() -= ha_ainv * hb.transpose();
    }
  }
  return true;
}

template <int K>
Eigen::Matrix<double, K, 1> back_substitute(const LandmarkBlock<K>& blk, const Eigen::VectorXd& dp) {
  Eigen::Matrix<double, K, 1> rhs = -blk.g;
  for (const auto& [a, ha] : blk.coupling) rhs.noalias() -= ha.transpose() * dp.segment<6>(6 * a);
  return blk.damped_inverse * rhs;
}

std::optional<Step> solve(Linearization& lin, double lambda, double mu) {
  const Eigen::Index n = lin.Hpp.rows();
  Eigen::MatrixXd S = lin.Hpp;
  S.diagonal() += lambda * lin.Hpp.diagonal() + Eigen::VectorXd::Constant(n, mu);
  Eigen::VectorXd rhs = -lin.gp;
  for (auto& b : lin.points) {
    if (!eliminate<3>(b, lambda, mu, S, rhs)) return std::nullopt;
  }
  for (auto& b : lin.lines) {
    if (!eliminate<6>(b, lambda, mu, S, rhs)) return std::nullopt;
  }
  Step step;
  step.poses = Eigen::VectorXd::Zero(n);
  if (n > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    step.poses = ldlt.solve(rhs);
  }
  step.norm_sq = step.poses.squaredNorm();
  step.points.reserve(lin.points.size());
  for (const auto& b : lin.points) {
    step.points.push_back(back_substitute<3>(b, step.poses));
    step.norm_sq += step.points.back().squaredNorm();
  }
  step.lines.reserve(lin.lines.size());
  for (const auto& b : lin.lines) {
    step.lines.push_back(back_substitute<6>(b, step.poses));
    step.norm_sq += step.lines.back().squaredNorm();
  }
  if (!std::isfinite(step.norm_sq)) return std::nullopt;
  return step;
}

BAProblem apply(const BAProblem& p, const Evaluator& ev, const Step& step) {
  BAProblem out = p;
  for (std::size_t i = 0; i < out.poses.size(); ++i) {
    const int fi = ev.free_index(i);
    if (fi < 0) continue;
    out.poses[i] = (se3_exp(step.poses.segment<6>(6 * fi)) * out.poses[i]).normalized();
  }
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i] += step.points[i];
  for (std::size_t i = 0; i < out.lines.size(); ++i) {
    out.lines[i].start += step.lines[i].head<3>();
    out.lines[i].end += step.lines[i].tail<3>();
  }
  return out;
}

}  // namespace

double ba_cost(const BAProblem& problem, const StereoCamera& cam, const BAOptions& options) {
  return Evaluator(problem, cam, options).cost(problem);
}

double reprojection_rms(const BAProblem& problem, const StereoCamera& cam, const BAOptions& options) {
  Evaluator ev(problem, cam, options);
  double sum = 0.0;
  std::size_t count = 0;
  ev.for_each_block(problem, [&](const auto& r, const auto&, const auto&, std::size_t, std::size_t) {
    sum += r.squaredNorm();
    count += static_cast<std::size_t>(r.rows());
  });
  return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

BAReport bundle_adjust(BAProblem& problem, const StereoCamera& cam, const BAOptions& options) {
  BAReport report;
  Evaluator ev(problem, cam, options);
  if (ev.free_count() == 0 && problem.points.empty() && problem.lines.empty()) {
    report.diagnostic = "nothing to optimize";
    return report;
  }

  Linearization lin = ev.linearize(problem);
  report.initial_cost = lin.cost;
  report.final_cost = lin.cost;
  double lambda = options.initial_lambda;
  bool solved_once = false;

  for (int it = 0; it < options.max_iterations; ++it) {
    report.iterations = it + 1;
    if (lin.cost == 0.0) break;
    const auto step = solve(lin, lambda, options.null_damping);
    if (!step) {
      lambda *= options.lambda_up;
      if (lambda > kMaxLambda) break;
      continue;
    }
    solved_once = true;
    BAProblem candidate = apply(problem, ev, *step);
    const double cost = ev.cost(candidate);
    const double step_norm = std::sqrt(step->norm_sq);
    if (cost < lin.cost) {
      const double rel = (lin.cost - cost) / lin.cost;
      problem = std::move(candidate);
      report.accepted_costs.push_back(cost);
      lambda *= options.lambda_down;
      if (step_norm < options.step_tolerance || rel < options.cost_tolerance) {
        lin.cost = cost;
        break;
      }
      lin = ev.linearize(problem);
    } else {
      if (step_norm < options.step_tolerance) break;
      lambda *= options.lambda_up;
      if (lambda > kMaxLambda) break;
    }
  }

  if (!solved_once && lin.cost != 0.0) {
    report.diagnostic = "singular system, bundle adjustment skipped";
    return report;
  }
  report.ran = true;
  report.final_cost = lin.cost;
  return report;
}

}  // namespace dynpl
