#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bsq/errors.hpp"
#include "bsq/models.hpp"

using namespace bsq;

TEST_CASE("polar to cartesian") {
  CHECK((polar_to_cartesian(Eigen::Vector2d(1.0, 0.0)) - Eigen::Vector2d(1.0, 0.0))
            .norm() < 1e-15);
  const Eigen::Vector2d up = polar_to_cartesian(Eigen::Vector2d(2.0, M_PI / 2.0));
  CHECK(up(0) == doctest::Approx(0.0).scale(1));
  CHECK(up(1) == doctest::Approx(2.0));
}

TEST_CASE("ungm model definition") {
  const StateSpaceModel model = ungm_model();
  CHECK(model.state_dim == 1);
  CHECK(model.meas_dim == 1);
  CHECK(model.dynamics(Eigen::VectorXd::Zero(1), 0)(0) == doctest::Approx(8.0));
  CHECK(model.measurement(Eigen::VectorXd::Constant(1, 10.0), 1)(0) ==
        doctest::Approx(5.0));
  CHECK(model.process_noise(0, 0) == 10.0);
  CHECK(model.meas_noise(0, 0) == 1.0);
  CHECK(model.init.mean(0) == 0.0);
  CHECK(model.init.cov(0, 0) == 5.0);

  // f(x, k) = x/2 + 25x/(1+x^2) + 8 cos(1.2 k)
  const double x = 2.0;
  CHECK(model.dynamics(Eigen::VectorXd::Constant(1, x), 5)(0) ==
        doctest::Approx(0.5 * x + 25.0 * x / (1.0 + x * x) +
                        8.0 * std::cos(6.0)));
}

TEST_CASE("generic simulation honors the recursion and the seed") {
  StateSpaceModel linear;
  linear.state_dim = 1;
  linear.meas_dim = 1;
  linear.dynamics = [](const Eigen::VectorXd& x, int) { return (0.9 * x).eval(); };
  linear.measurement = [](const Eigen::VectorXd& x, int) { return (2.0 * x).eval(); };
  linear.process_noise = Eigen::MatrixXd::Zero(1, 1);
  linear.meas_noise = Eigen::MatrixXd::Zero(1, 1);
  linear.init.mean = Eigen::VectorXd::Constant(1, 4.0);
  linear.init.cov = Eigen::MatrixXd::Zero(1, 1);

  const Trajectory traj = simulate_trajectory(linear, 10, 5);
  double x = 4.0;
  for (int k = 0; k < 10; ++k) {
    x *= 0.9;
    CHECK(traj.states[static_cast<std::size_t>(k)](0) == doctest::Approx(x));
    CHECK(traj.measurements[static_cast<std::size_t>(k)](0) ==
          doctest::Approx(2.0 * x));
  }

  const StateSpaceModel ungm = ungm_model();
  const Trajectory a = simulate_trajectory(ungm, 500, 42);
  const Trajectory b = simulate_trajectory(ungm, 500, 42);
  REQUIRE(a.states.size() == 500);
  REQUIRE(a.measurements.size() == 500);
  for (std::size_t k = 0; k < 500; ++k) {
    CHECK(a.states[k](0) == b.states[k](0));
    CHECK(a.measurements[k](0) == b.measurements[k](0));
  }
  const Trajectory c = simulate_trajectory(ungm, 500, 43);
  CHECK(a.states[0](0) != c.states[0](0));
}

TEST_CASE("measurements regenerate from stored states") {
  const StateSpaceModel ungm = ungm_model();
  const Trajectory traj = simulate_trajectory(ungm, 100, 11);
  const auto regenerated = regenerate_measurements(ungm, traj.states, 11);
  REQUIRE(regenerated.size() == traj.measurements.size());
  for (std::size_t k = 0; k < regenerated.size(); ++k)
    CHECK(regenerated[k](0) == traj.measurements[k](0));
}

TEST_CASE("reentry truth simulation") {
  const Trajectory traj = reentry_truth_simulate(7);
  REQUIRE(traj.states.size() == 2000);  // 200 s at the 0.1 s filter rate
  REQUIRE(traj.measurements.size() == 2000);
  REQUIRE(traj.states.front().size() == 5);
  REQUIRE(traj.measurements.front().size() == 2);

  // Starts near the nominal initial condition (tight init covariance).
  CHECK(traj.states.front()(0) == doctest::Approx(6500.0).epsilon(1e-3));
  CHECK(traj.states.front()(1) == doctest::Approx(350.0).epsilon(1e-2));
  CHECK(traj.states.front()(4) == doctest::Approx(0.7).epsilon(1e-6));

  // The vehicle descends on average and never diverges.
  auto radius = [](const Eigen::VectorXd& x) { return std::hypot(x(0), x(1)); };
  const double initial_alt = radius(traj.states.front()) - reentry::kEarthRadius;
  const double final_alt = radius(traj.states.back()) - reentry::kEarthRadius;
  CHECK(final_alt < initial_alt);
  for (const auto& x : traj.states) {
    CHECK(x.allFinite());
    CHECK(std::hypot(x(2), x(3)) < 20.0);  // km/s, stays physical
  }

  // Deterministic replay, byte for byte through the serializer.
  std::ostringstream first, second;
  write_trajectory_csv(first, traj);
  write_trajectory_csv(second, reentry_truth_simulate(7));
  CHECK(first.str() == second.str());
}

TEST_CASE("reentry filter model") {
  const StateSpaceModel model = reentry_filter_model();
  CHECK(model.state_dim == 5);
  CHECK(model.meas_dim == 2);

  // Deliberately misspecified initial velocity.
  CHECK(model.init.mean(2) == doctest::Approx(-1.1));
  CHECK(model.init.mean(3) == doctest::Approx(-6.1));
  CHECK(model.init.cov(4, 4) == doctest::Approx(1.0));

  // Noise enters velocity and parameter rows only.
  CHECK(model.process_noise(0, 0) == 0.0);
  CHECK(model.process_noise(1, 1) == 0.0);
  CHECK(model.process_noise(2, 2) == doctest::Approx(0.1 * 2.4e-5));
  CHECK(model.process_noise(4, 4) == doctest::Approx(0.1 * 1e-6));

  Eigen::VectorXd x(5);
  x << 6500.0, 0.0, -1.0, -5.0, 0.7;
  const Eigen::VectorXd y = model.measurement(x, 1);
  CHECK(y(0) == doctest::Approx(6500.0));
  CHECK(y(1) == doctest::Approx(0.0).scale(1));
  CHECK(model.angular_measurements == std::vector<int>{1});

  // One Euler step moves the position by v * dt.
  const Eigen::VectorXd next = model.dynamics(x, 1);
  CHECK(next(0) == doctest::Approx(6500.0 - 0.1));
  CHECK(next(1) == doctest::Approx(-0.5));
}

TEST_CASE("trajectory csv round trip") {
  const Trajectory traj = simulate_trajectory(ungm_model(), 25, 3);
  std::stringstream buffer;
  write_trajectory_csv(buffer, traj);
  const Trajectory loaded = read_trajectory_csv(buffer);
  REQUIRE(loaded.states.size() == traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    CHECK(loaded.states[k](0) == traj.states[k](0));
    CHECK(loaded.measurements[k](0) == traj.measurements[k](0));
  }
}
