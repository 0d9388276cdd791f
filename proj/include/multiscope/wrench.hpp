#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "multiscope/geometry.hpp"

namespace multiscope {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

enum class Frame { kToolEE, kProbeEE, kWorld };

/// Force (N) and torque (N m) about the origin of `frame`.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  Frame frame = Frame::kWorld;

  Vec6 vector() const {
    Vec6 v;
    v << force, torque;
    return v;
  }
  static Wrench from_vector(const Vec6& v, Frame f) { return {v.head<3>(), v.tail<3>(), f}; }
  bool finite() const { return force.allFinite() && torque.allFinite(); }
};

/// Point contact: no moment is transmitted through the contact.
inline Wrench contact_wrench(const Vec3& r, const Vec3& f, Frame frame = Frame::kWorld) {
  return {f, r.cross(f), frame};
}

/// Re-expresses `w` through X = (R, p): F' = R F, T' = R T + p x (R F).
inline Wrench transform_wrench(const Wrench& w, const Transform& x, Frame to) {
  const Vec3 f = x.linear() * w.force;
  return {f, x.linear() * w.torque + x.translation().cross(f), to};
}

inline Wrench transform_wrench(const Wrench& w, const Transform& x) { return transform_wrench(w, x, w.frame); }

/// Measurement covariance Sigma_m of a wrench sensor.
class SensorNoise {
 public:
  SensorNoise() : SensorNoise(0.05, 0.005) {}

  SensorNoise(double sigma_force, double sigma_torque) {
    Vec6 d;
    d << Vec3::Constant(sigma_force * sigma_force), Vec3::Constant(sigma_torque * sigma_torque);
    set(d.asDiagonal());
  }

  explicit SensorNoise(const Mat6& covariance) { set(covariance); }

  const Mat6& covariance() const { return cov_; }
  const Mat6& information() const { return info_; }

 private:
  void set(const Mat6& c) {
    if (!c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("sensor covariance must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat6> eig(c);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("sensor covariance must be positive definite");
    }
    cov_ = c;
    info_ = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    info_ = 0.5 * (info_ + info_.transpose());
  }

  Mat6 cov_;
  Mat6 info_;
};

/// Fits Sigma_m as the sample covariance of a static capture
/// (CSV columns t,Fx,Fy,Fz,Tx,Ty,Tz; a non-numeric first line is a header).
inline SensorNoise fit_sensor_noise(std::istream& in) {
  std::vector<Vec6> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw std::runtime_error("static capture: non-numeric row: " + line);
    }
    first = false;
    if (vals.size() != 7) throw std::runtime_error("static capture: expected 7 columns");
    Vec6 w;
    for (int k = 0; k < 6; ++k) w[k] = vals[k + 1];
    rows.push_back(w);
  }
  if (rows.size() < 7) throw std::runtime_error("static capture: need at least 7 samples");
  Vec6 mean = Vec6::Zero();
  for (const Vec6& r : rows) mean += r;
  mean /= static_cast<double>(rows.size());
  Mat6 cov = Mat6::Zero();
  for (const Vec6& r : rows) cov += (r - mean) * (r - mean).transpose();
  cov /= static_cast<double>(rows.size() - 1);
  cov = 0.5 * (cov + cov.transpose());
  return SensorNoise(cov);
}

inline SensorNoise fit_sensor_noise(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open static capture " + path);
  return fit_sensor_noise(in);
}

struct ForceSolve {
  Vec3 force;
  Vec6 residual;  // predicted minus measured
  double nll;
};

/// Weighted least-squares contact force at r:
///   f* = argmin_f ([f; r x f] - gamma)^T Sigma^-1 ([f; r x f] - gamma),
/// nll = 0.5 residual^T Sigma^-1 residual.
inline ForceSolve solve_contact_force(const Vec3& r, const Wrench& gamma, const SensorNoise& noise) {
  Eigen::Matrix<double, 6, 3> a;
  Mat3 skew;
  skew << 0.0, -r.z(), r.y(), r.z(), 0.0, -r.x(), -r.y(), r.x(), 0.0;
  a << Mat3::Identity(), skew;
  const Mat6& w = noise.information();
  const Vec6 g = gamma.vector();
  const Eigen::Matrix<double, 3, 6> atw = a.transpose() * w;
  const Mat3 normal = atw * a;
  const Vec3 f = normal.ldlt().solve(atw * g);
  const Vec6 res = a * f - g;
  return {f, res, 0.5 * res.dot(w * res)};
}

/// Force-direction penalty: pokes push, so a solved force pointing out of
/// the surface (positive along the outward normal) is penalised.
inline double direction_penalty(const Vec3& force, const Vec3& outward_normal, double lambda) {
  const double along = force.dot(outward_normal);
  return along > 0.0 ? lambda * along * along : 0.0;
}

/// Friction-cone penalty on the tangential part of a solved force:
/// lambda * max(0, |f_t| - mu * f_in)^2 with f_in the pushing component.
inline double friction_penalty(const Vec3& force, const Vec3& outward_normal, double mu, double lambda) {
  if (lambda == 0.0) return 0.0;
  const double along = force.dot(outward_normal);
  const double tangential = (force - along * outward_normal).norm();
  const double excess = tangential - mu * std::max(0.0, -along);
  return excess > 0.0 ? lambda * excess * excess : 0.0;
}

/// Per-axis Gaussian wrench noise with sigma a fraction of the block norm.
struct NoiseSpec {
  double fraction = 0.0;  // n_pct as a fraction, e.g. 0.05
};

inline Wrench inject_noise(const Wrench& gamma, const NoiseSpec& spec, std::mt19937_64& rng) {
  if (spec.fraction < 0.0) throw std::invalid_argument("noise fraction must be non-negative");
  if (spec.fraction == 0.0) return gamma;
  const double sf = spec.fraction * gamma.force.norm();
  const double st = spec.fraction * gamma.torque.norm();
  std::normal_distribution<double> unit(0.0, 1.0);
  Wrench out = gamma;
  for (int k = 0; k < 3; ++k) out.force[k] += sf * unit(rng);
  for (int k = 0; k < 3; ++k) out.torque[k] += st * unit(rng);
  return out;
}

enum class WrenchNorm { kL1, kL2 };

inline double wrench_distance(const Wrench& a, const Wrench& b, WrenchNorm norm = WrenchNorm::kL1) {
  const Vec6 d = a.vector() - b.vector();
  return norm == WrenchNorm::kL1 ? d.lpNorm<1>() : d.norm();
}

}  // namespace multiscope
