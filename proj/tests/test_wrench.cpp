#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "common.hpp"

using namespace mst;

namespace {

void expect_vec(const Vec3& a, const Vec3& b, double tol = 1e-12) {
  EXPECT_NEAR((a - b).norm(), 0.0, tol) << a.transpose() << " vs " << b.transpose();
}

TEST(ContactWrench, ParallelLeverArmHasNoTorque) {
  const Wrench w = contact_wrench({0, 0, 1}, {0, 0, 3});
  expect_vec(w.force, {0, 0, 3});
  expect_vec(w.torque, {0, 0, 0});
}

TEST(ContactWrench, CrossProduct) {
  const Wrench w = contact_wrench({1, 0, 0}, {0, 0, 3});
  expect_vec(w.force, {0, 0, 3});
  expect_vec(w.torque, {0, -3, 0});
}

TEST(ContactWrench, ZeroLeverArm) {
  expect_vec(contact_wrench(Vec3::Zero(), {1.5, -2, 7}).torque, Vec3::Zero());
}

TEST(TransformWrench, IdentityAndTranslationAndRoundTrip) {
  const Wrench w{{1, 2, 3}, {0.1, -0.2, 0.3}, Frame::kWorld};
  const Wrench same = transform_wrench(w, Transform::Identity());
  expect_vec(same.force, w.force);
  expect_vec(same.torque, w.torque);

  Transform t = Transform::Identity();
  t.translation() = Vec3(0, 0, 1);
  const Wrench moved = transform_wrench({{1, 0, 0}, Vec3::Zero(), Frame::kWorld}, t);
  expect_vec(moved.force, {1, 0, 0});
  expect_vec(moved.torque, {0, 1, 0});

  Transform x = Transform::Identity();
  x.linear() = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  x.translation() = Vec3(0.3, -0.2, 0.5);
  const Wrench back = transform_wrench(transform_wrench(w, x), x.inverse(Eigen::Isometry));
  expect_vec(back.force, w.force);
  expect_vec(back.torque, w.torque);
}

TEST(SolveContactForce, ExactModelIdentityCovariance) {
  const SensorNoise unit(Mat6::Identity());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Vec3 r(g(rng), g(rng), g(rng)), f(g(rng), g(rng), g(rng));
    const ForceSolve s = solve_contact_force(r, contact_wrench(r, f), unit);
    expect_vec(s.force, f, 1e-10);
    EXPECT_LT(s.residual.norm(), 1e-10);
    EXPECT_LT(s.nll, 1e-20);
  }
}

TEST(SolveContactForce, ZeroWrenchGivesZeroForce) {
  const ForceSolve s = solve_contact_force({0.01, 0.02, 0.03}, Wrench{}, SensorNoise());
  expect_vec(s.force, Vec3::Zero());
  EXPECT_EQ(s.nll, 0.0);
}

TEST(SolveContactForce, TrueContactIsBruteForceArgmin) {
  const ObjectModel& m = model("wrench");
  const SensorNoise noise;
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> pick(0, m.samples.size() - 1);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t i0 = pick(rng);
    const Wrench gamma = contact_wrench(m.samples.points[i0], -3.0 * m.samples.normals[i0]);
    const double at_truth = solve_contact_force(m.samples.points[i0], gamma, noise).nll;
    for (int k = 0; k < 50; ++k) {
      const std::size_t j = pick(rng);
      if (j == i0) continue;
      EXPECT_LT(at_truth, solve_contact_force(m.samples.points[j], gamma, noise).nll);
    }
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.samples.size(); ++j) {
      const double v = solve_contact_force(m.samples.points[j], gamma, noise).nll;
      if (v < best) {
        best = v;
        arg = j;
      }
    }
    EXPECT_EQ(arg, i0);
  }
}

TEST(InjectNoise, ZeroFractionIsExact) {
  const Wrench w{{1, 2, 3}, {4, 5, 6}, Frame::kToolEE};
  std::mt19937_64 rng(1);
  const Wrench out = inject_noise(w, {0.0}, rng);
  EXPECT_EQ(out.force, w.force);
  EXPECT_EQ(out.torque, w.torque);
}

TEST(InjectNoise, FivePercentOfThreeNewtons) {
  const Wrench w{{0, 0, 3}, {0.01, 0, 0}, Frame::kToolEE};
  std::mt19937_64 rng(7);
  double ss = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const Wrench o = inject_noise(w, {0.05}, rng);
    ss += (o.force - w.force).squaredNorm();
  }
  EXPECT_NEAR(std::sqrt(ss / (3.0 * n)), 0.15, 0.15 * 0.02);
}

TEST(InjectNoise, FixedSeedRepeats) {
  const Wrench w{{0, 1, 3}, {0.01, 0.02, 0}, Frame::kProbeEE};
  std::mt19937_64 a(9), b(9);
  const Wrench x = inject_noise(w, {0.08}, a), y = inject_noise(w, {0.08}, b);
  EXPECT_EQ(x.force, y.force);
  EXPECT_EQ(x.torque, y.torque);
}

TEST(WrenchError, ExactSingleParticleIsZero) {
  const Vec3 r(0.01, 0, 0.02), f(0, 0, -3);
  ContactBelief b;
  b.particles.push_back({r, f, 1.0});
  EXPECT_NEAR(wrench_error(b, contact_wrench(r, f)), 0.0, 1e-15);
}

TEST(WrenchError, ZeroWeightParticleIgnored) {
  const Vec3 r(0.01, 0, 0.02), f(0, 0, -3);
  ContactBelief b;
  b.particles.push_back({r, f, 1.0});
  b.particles.push_back({Vec3(5, 5, 5), Vec3(9, 9, 9), 0.0});
  EXPECT_NEAR(wrench_error(b, contact_wrench(r, f)), 0.0, 1e-15);
}

TEST(WrenchError, ThreeParticleCubeMatchesHandEvaluation) {
  const ObjectModel& cube = model("cube");
  const Wrench gamma = contact_wrench({0.02, 0.0, 0.005}, {-3, 0, 0}, Frame::kToolEE);
  ContactBelief b;
  const double s[3] = {0.5, 0.3, 0.2};
  for (int k = 0; k < 3; ++k) {
    const Vec3& r = cube.samples.points[static_cast<std::size_t>(k) * 97];
    b.particles.push_back({r, solve_contact_force(r, gamma, SensorNoise()).force, s[k]});
  }
  double expect = 0.0;
  for (const ContactParticle& p : b.particles) {
    const Vec3 t = p.r.cross(p.f);
    double l1 = 0.0;
    for (int k = 0; k < 3; ++k) l1 += std::abs(p.f[k] - gamma.force[k]) + std::abs(t[k] - gamma.torque[k]);
    expect += p.s * l1;
  }
  EXPECT_NEAR(wrench_error(b, gamma), expect, 1e-14);
}

TEST(WrenchProperty, ContactThenSolveIsExactInverse) {
  const SensorNoise noise;
  const ObjectModel& m = model("pawl");
  for (std::size_t i = 0; i < m.samples.size(); i += 37) {
    const Vec3& r = m.samples.points[i];
    const ForceSolve s = solve_contact_force(r, contact_wrench(r, -3.0 * m.samples.normals[i]), noise);
    EXPECT_LT(s.residual.norm(), 1e-10);
  }
}

TEST(WrenchProperty, RotationEquivariance) {
  const SensorNoise noise(0.05, 0.005);  // isotropic blocks, unchanged by rotation
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Mat3 rot = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
    const Vec3 r(0.02 * g(rng), 0.02 * g(rng), 0.02 * g(rng));
    const Wrench w{{g(rng), g(rng), g(rng)}, {0.01 * g(rng), 0.01 * g(rng), 0.01 * g(rng)}, Frame::kWorld};
    const ForceSolve a = solve_contact_force(r, w, noise);
    const ForceSolve b = solve_contact_force(rot * r, {rot * w.force, rot * w.torque, Frame::kWorld}, noise);
    expect_vec(b.force, rot * a.force, 1e-9);
    EXPECT_NEAR(a.nll, b.nll, 1e-9 * (1.0 + a.nll));
  }
}

TEST(WrenchProperty, NllScalesInverselyWithCovariance) {
  const Vec3 r(0.01, 0.002, 0.03);
  const Wrench w{{0.3, -2.9, 0.1}, {0.02, 0.001, -0.01}, Frame::kWorld};
  Mat6 c = Mat6::Zero();
  c.diagonal() << 0.01, 0.02, 0.03, 1e-4, 2e-4, 3e-4;
  const double base = solve_contact_force(r, w, SensorNoise(c)).nll;
  for (double k : {0.5, 2.0, 10.0}) {
    EXPECT_NEAR(solve_contact_force(r, w, SensorNoise(Mat6(k * c))).nll, base / k, 1e-9 * base);
  }
}

TEST(WrenchProperty, NoiseKeepsFrameAndBlocksIndependent) {
  std::mt19937_64 rng(4);
  const Wrench w{{0, 0, 3}, Vec3::Zero(), Frame::kProbeEE};
  const Wrench o = inject_noise(w, {0.1}, rng);
  EXPECT_EQ(o.frame, Frame::kProbeEE);
  EXPECT_NE(o.force, w.force);
  EXPECT_EQ(o.torque, w.torque);  // sigma_T = 0.1 * |T| = 0
}

TEST(SensorNoise, FitFromStaticCapture) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::ostringstream csv;
  csv << "t,Fx,Fy,Fz,Tx,Ty,Tz\n";
  std::vector<Vec6> rows;
  for (int k = 0; k < 50; ++k) {
    Vec6 v;
    for (int j = 0; j < 6; ++j) v[j] = (j < 3 ? 0.05 : 0.005) * g(rng) + j;
    rows.push_back(v);
    csv << k;
    for (int j = 0; j < 6; ++j) csv << ',' << num(v[j]);
    csv << '\n';
  }
  std::istringstream in(csv.str());
  const SensorNoise fit = fit_sensor_noise(in);
  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < 6; ++b) {
      double ma = 0, mb = 0;
      for (const Vec6& v : rows) {
        ma += v[a] / 50;
        mb += v[b] / 50;
      }
      double c = 0;
      for (const Vec6& v : rows) c += (v[a] - ma) * (v[b] - mb) / 49;
      EXPECT_NEAR(fit.covariance()(a, b), c, 1e-12);
    }
  }
}

TEST(SensorNoise, RejectsIndefinite) {
  Mat6 c = Mat6::Identity();
  c(2, 2) = -1.0;
  EXPECT_THROW(SensorNoise{c}, std::invalid_argument);
}

}  // namespace
