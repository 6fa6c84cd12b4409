#include <doctest.h>

#include <cmath>

#include "berrysim/visual_servo.hpp"

using namespace berrysim;

namespace {

Scene one_berry(double x, double y, double z, double d = 19.1) {
  Scene scene;
  BerryInstance b;
  b.id = 0;
  b.position_mm = {x, y, z};
  b.diameter_mm = d;
  scene.berries.push_back(b);
  return scene;
}

DetectorParams noiseless() {
  DetectorParams p;
  p.center_jitter_px = 0.0;
  p.size_jitter_frac = 0.0;
  return p;
}

GraspHandler always_detach() {
  return [](BerryInstance&, double, Rng&) {
    GraspResult r;
    r.outcome = DetachOutcome::Detached;
    return r;
  };
}

}  // namespace

TEST_CASE("calibrated Jacobian matches the analytic pinhole interaction values") {
  const Scene scene = one_berry(0, 0, 200.0);
  const CameraModel cam;
  Rng rng(1);
  const auto jac = calibrate_jacobian(scene, cam, noiseless(), 0, 2.0, rng);
  REQUIRE(jac.has_value());
  const double f_over_z = cam.focal_length_px() / 200.0;  // 3.8136 px/mm
  CHECK((*jac)(0, 0) == doctest::Approx(-f_over_z).epsilon(1e-9));
  CHECK((*jac)(1, 1) == doctest::Approx(-f_over_z).epsilon(1e-9));
  CHECK(std::abs((*jac)(0, 1)) < 1e-9);
  CHECK(std::abs((*jac)(1, 0)) < 1e-9);
}

TEST_CASE("jog step size does not bias the noiseless estimate") {
  // image coordinates are linear in lateral translation, so the secant is
  // exact for every jog step
  const Scene scene = one_berry(-20.0, 10.0, 320.0);
  const CameraModel cam;
  ImageJacobian first;
  bool have_first = false;
  for (double jog : {1.0, 2.0, 4.0}) {
    Rng rng(1);
    const auto jac = calibrate_jacobian(scene, cam, noiseless(), 0, jog, rng);
    REQUIRE(jac.has_value());
    if (!have_first) {
      first = *jac;
      have_first = true;
    } else {
      CHECK((*jac - first).norm() < 1e-9);
    }
  }
}

TEST_CASE("detection noise averages out of the Jacobian as the jog grows") {
  const Scene scene = one_berry(0, 0, 250.0);
  const CameraModel cam;
  DetectorParams noisy = noiseless();
  noisy.center_jitter_px = 2.0;
  const double f_over_z = cam.focal_length_px() / 250.0;
  ImageJacobian truth;
  truth << -f_over_z, 0, 0, -f_over_z;

  Rng rng(7);
  double err_small = 0.0, err_large = 0.0;
  const int reps = 400;
  for (int i = 0; i < reps; ++i) {
    err_small += (*calibrate_jacobian(scene, cam, noisy, 0, 1.0, rng) - truth).norm();
    err_large += (*calibrate_jacobian(scene, cam, noisy, 0, 8.0, rng) - truth).norm();
  }
  CHECK(err_large < err_small);  // error ~ sigma/jog
}

TEST_CASE("calibration reports loss when the target disappears") {
  const Scene scene = one_berry(0, 0, 200.0);
  Rng rng(1);
  CHECK_FALSE(calibrate_jacobian(scene, CameraModel{}, noiseless(), 99, 2.0, rng).has_value());
}

TEST_CASE("centering solves the linear correction") {
  ImageJacobian jac;
  jac << -3.8136114963014722, 0, 0, -3.8136114963014722;

  const auto zero = centering_step(jac, 1.0, {0.0, 0.0});
  REQUIRE(zero.has_value());
  CHECK(zero->norm() == 0.0);

  const auto full = centering_step(jac, 1.0, {-76.27222992602945, 0.0});
  REQUIRE(full.has_value());
  CHECK((*full)(0) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK((*full)(1) == doctest::Approx(0.0));

  const auto half = centering_step(jac, 0.5, {-76.27222992602945, 0.0});
  REQUIRE(half.has_value());
  CHECK((*half)(0) == doctest::Approx(10.0).epsilon(1e-9));

  ImageJacobian singular = ImageJacobian::Zero();
  CHECK_FALSE(centering_step(singular, 1.0, {5.0, 5.0}).has_value());
}

TEST_CASE("one centering step contracts the pixel error by 1 - gain") {
  const CameraModel cam;
  for (double gain : {0.3, 0.7, 1.0}) {
    Scene scene = one_berry(30.0, -18.0, 280.0);
    CameraModel camera = cam;
    Rng rng(1);
    auto boxes = detect(scene, camera, noiseless(), rng);
    REQUIRE(boxes.size() == 1);
    Eigen::Vector2d err0(camera.cx() - boxes[0].center_u, camera.cy() - boxes[0].center_v);

    const auto jac = calibrate_jacobian(scene, camera, noiseless(), 0, 2.0, rng);
    REQUIRE(jac.has_value());
    const auto step = centering_step(*jac, gain, err0);
    REQUIRE(step.has_value());
    camera.pose.position += Eigen::Vector3d((*step)(0), (*step)(1), 0.0);

    boxes = detect(scene, camera, noiseless(), rng);
    REQUIRE(boxes.size() == 1);
    Eigen::Vector2d err1(camera.cx() - boxes[0].center_u, camera.cy() - boxes[0].center_v);
    CHECK(std::abs(err1.norm() - (1.0 - gain) * err0.norm()) < 0.5);
  }
}

TEST_CASE("approach moves half the remaining distance above the standoff") {
  CHECK(approach_step(400.0, 5.0) == doctest::Approx(197.5));
  CHECK(approach_step(5.0, 5.0) == 0.0);

  // geometric series: six exact-depth steps leave 5 + 395 * 0.5^6
  double depth = 400.0;
  for (int i = 0; i < 6; ++i) depth -= approach_step(depth, 5.0);
  CHECK(depth == doctest::Approx(11.171875).epsilon(1e-12));
}

TEST_CASE("run_ibvs with no berries stops immediately") {
  Scene scene;
  Rng rng(1);
  const IbvsResult result =
      run_ibvs(scene, CameraModel{}, noiseless(), ServoParams{}, 5.0, Pose{},
               {150, 120, 60}, always_detach(), rng);
  REQUIRE(!result.trajectory.empty());
  CHECK(result.trajectory.back().phase == ServoPhase::Done);
  CHECK(result.trajectory.size() == 2);  // home pose + stop
  CHECK(result.per_berry.empty());
  CHECK_FALSE(result.nonconvergence);
}

TEST_CASE("noiseless three-berry run harvests all, left-most first, in 7 approaches") {
  Scene scene;
  const double xs[3] = {60.0, -60.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    BerryInstance b;
    b.id = i;
    b.position_mm = {xs[i], 0.0, 400.0};
    b.diameter_mm = 19.1;
    scene.berries.push_back(b);
  }
  Rng rng(1);
  const IbvsResult result =
      run_ibvs(scene, CameraModel{}, noiseless(), ServoParams{}, 5.0, Pose{},
               {150, 120, 60}, always_detach(), rng);

  REQUIRE(result.resolution_order.size() == 3);
  CHECK(result.resolution_order[0] == 1);  // x = -60 first
  CHECK(result.resolution_order[1] == 2);
  CHECK(result.resolution_order[2] == 0);
  for (const auto& [id, stats] : result.per_berry) {
    CHECK(stats.outcome == DetachOutcome::Detached);
    // smallest k with 395 * 0.5^k < 10 - 5  ->  k = 7
    CHECK(stats.approach_steps == 7);
    CHECK(stats.servo_iterations <= ServoParams{}.iteration_cap);
  }
  // harvest order sorted by initial image u
  double prev_u = -1.0;
  for (int id : result.resolution_order) {
    const double u = result.per_berry.at(id).initial_center_u;
    CHECK(u > prev_u);
    prev_u = u;
  }
  for (const BerryInstance& b : scene.berries) CHECK_FALSE(b.attached);
}

TEST_CASE("iteration cap marks the berry NonConvergence and moves on") {
  Scene scene = one_berry(0, 0, 400.0);
  ServoParams params;
  params.iteration_cap = 3;  // far too few to converge from 400 mm
  Rng rng(1);
  const IbvsResult result =
      run_ibvs(scene, CameraModel{}, noiseless(), params, 5.0, Pose{}, {150, 120, 60},
               always_detach(), rng);
  CHECK(result.nonconvergence);
  REQUIRE(result.per_berry.count(0) == 1);
  CHECK(result.per_berry.at(0).outcome == DetachOutcome::NonConvergence);
  CHECK(scene.berries[0].attached);
}

TEST_CASE("identical seeds give identical trajectories") {
  auto run_once = [](std::uint64_t seed) {
    Scene scene = one_berry(25.0, -10.0, 380.0);
    DetectorParams noisy;  // default noise
    Rng rng(seed);
    return run_ibvs(scene, CameraModel{}, noisy, ServoParams{}, 5.0, Pose{},
                    {150, 120, 60}, always_detach(), rng);
  };
  const IbvsResult a = run_once(77);
  const IbvsResult b = run_once(77);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK((a.trajectory[i].position - b.trajectory[i].position).norm() == 0.0);
    CHECK(a.trajectory[i].phase == b.trajectory[i].phase);
  }
}
