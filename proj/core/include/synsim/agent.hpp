#pragma once

#include <Eigen/Dense>

#include "synsim/numerics.hpp"

namespace synsim {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Row2 = Eigen::RowVector2d;

/// Chain-of-integrators plant: state [y, ydot], input is force acceleration.
namespace plant {
inline Mat2 a() { return (Mat2() << 0.0, 1.0, 0.0, 0.0).finished(); }
inline Vec2 b() { return Vec2(0.0, 1.0); }
inline Row2 c() { return Row2(1.0, 0.0); }
}  // namespace plant

/// One agent: true state, filter estimate and estimate error covariance.
struct AgentState {
    Vec2 z = Vec2::Zero();      // [force N, force rate N/s]
    Vec2 z_hat = Vec2::Zero();
    Mat2 p = Mat2::Identity();
};

/// The sensor is read once per step. `r` is the per-sample measurement
/// variance the filter assumes; the matching continuous-time intensity is
/// r * dt.
struct NoiseConfig {
    Mat2 q_noise = 0.095 * Mat2::Identity();  // process noise intensity
    double r = 2.24;                          // per-sample measurement variance seen by the filter
    double sensor_variance = 2.24;            // per-sample variance of the simulated sensor
};

/// Validated noise parameters with the process-noise factor precomputed.
class NoiseModel {
public:
    explicit NoiseModel(const NoiseConfig& cfg);

    const NoiseConfig& config() const { return cfg_; }
    double r() const { return cfg_.r; }
    Vec2 process_draw(RngStream& rng) const;

private:
    NoiseConfig cfg_;
    Mat2 factor_;
};

/// One Euler-Maruyama step of zdot = A_c z + B_c u + w.
///
/// The rate is advanced first and the force integrates the updated rate
/// (semi-implicit ordering). Process noise enters as sqrt(dt) * N(0, Q).
AgentState step_true_dynamics(AgentState state, double u, double dt, const NoiseModel& noise, RngStream& rng);

/// y = C_c z + v with v ~ N(0, sensor_variance).
double measure(const AgentState& state, double sensor_variance, RngStream& rng);

/// Measurement correction of the estimate with gain P C^T / (C P C^T + r).
AgentState kalman_correct(AgentState state, double y_meas, double r);

/// Advances the error covariance along Pdot = A P + P A^T + Q - P C^T C P / (r dt)
/// over one step using the exact flow of the associated Hamiltonian system,
/// written as P+ = Psi + Phi P (I + Gamma P)^-1 Phi^T with Psi, Gamma PSD.
/// The map keeps P symmetric PSD and its fixed point is the stabilizing
/// dual CARE.
class CovariancePropagator {
public:
    CovariancePropagator(const NoiseConfig& noise, double dt);

    Mat2 advance(const Mat2& p) const;
    double dt() const { return dt_; }

private:
    double dt_;
    Mat2 phi_, gamma_, psi_;
};

/// Time update: propagates the estimate with u and advances P.
AgentState kalman_predict(AgentState state, double u, const CovariancePropagator& cov);
AgentState kalman_predict(AgentState state, double u, const NoiseConfig& noise, double dt);

/// kalman_correct followed by kalman_predict.
AgentState kalman_step(AgentState state, double u, double y_meas, const NoiseConfig& noise, double dt);

/// Right-hand side of the covariance Riccati equation for sensor period dt.
Mat2 riccati_rate(const Mat2& p, const NoiseConfig& noise, double dt);

/// Steady-state error covariance: the dual CARE
/// P A^T + A P - P C^T C P / (r dt) + Q = 0.
Mat2 steady_state_covariance(const NoiseConfig& noise, double dt);

}  // namespace synsim
