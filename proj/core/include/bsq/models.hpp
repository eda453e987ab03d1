#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "bsq/filtering.hpp"

namespace bsq {

/// (r, theta) -> (r cos theta, r sin theta).
Eigen::Vector2d polar_to_cartesian(const Eigen::Ref<const Eigen::Vector2d>& polar);

/// Univariate non-stationary growth model:
/// f(x, k) = x/2 + 25x/(1+x^2) + 8 cos(1.2 k), h(x) = x^2/20,
/// Q = 10, R = 1, x_0 ~ N(0, 5).
StateSpaceModel ungm_model();

struct Trajectory {
  std::vector<Eigen::VectorXd> states;        // x_1..x_T
  std::vector<Eigen::VectorXd> measurements;  // y_1..y_T
};

/// Simulates x_k = f(x_{k-1}, k) + q, y_k = h(x_k, k) + r with the initial
/// state drawn from model.init. Deterministic per seed; the initial-state,
/// process and measurement noise streams are independent.
Trajectory simulate_trajectory(const StateSpaceModel& model, int horizon,
                               std::uint64_t seed);

/// Re-draws only the measurement noise stream of `seed` against stored
/// states; reproduces simulate_trajectory's measurements exactly.
std::vector<Eigen::VectorXd> regenerate_measurements(
    const StateSpaceModel& model, const std::vector<Eigen::VectorXd>& states,
    std::uint64_t seed);

namespace reentry {
inline constexpr double kEarthRadius = 6374.0;       // km
inline constexpr double kScaleHeight = 13.406;       // km
inline constexpr double kBallisticCoef = -0.59783;   // beta_0
inline constexpr double kGravityConst = 3.9860e5;    // km^3/s^2
inline constexpr double kTruthDt = 0.05;             // s
inline constexpr double kFilterDt = 0.1;             // s
inline constexpr double kDuration = 200.0;           // s
inline constexpr double kVelNoiseDensity = 2.4e-5;   // km^2/s^2 (truth and filter)
inline constexpr double kFilterThetaNoise = 1e-6;    // filter-assumed theta density

/// Drift of the reentry state (px, py, vx, vy, theta):
/// positions integrate velocity; velocities feel drag and gravity;
/// theta has no drift.
Eigen::VectorXd drift(const Eigen::Ref<const Eigen::VectorXd>& x);
}  // namespace reentry

/// Euler-Maruyama simulation of the reentry vehicle over 200 s at a 0.05 s
/// step, subsampled to the 0.1 s filter rate, plus range/bearing radar
/// measurements at every filter step. Throws SimulationError if the
/// trajectory reaches the Earth's center.
Trajectory reentry_truth_simulate(std::uint64_t seed);

/// Discrete-time model assumed by the reentry filters (0.1 s Euler step,
/// noise on velocity and theta rows only, deliberately misspecified initial
/// velocity, bearing flagged angular).
StateSpaceModel reentry_filter_model();

/// One row per step: k, state components, measurement components.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace bsq
