#pragma once

#include <utility>

#include "synsim/agent.hpp"
#include "synsim/numerics.hpp"
#include "synsim/topology.hpp"

namespace synsim {

/// Stable second-order reference for the average output.
///
/// The state is [ybar_d, ybar_d'] so C_d = [1 0], C_d B_d = 0 and
/// C_d A_d = [0 1]; the system is then fully described by its normal form
/// ybar_d'' = alpha_d z + gamma_d y_t.
struct DesiredDynamics {
    Mat2 a;
    Vec2 b;
    Row2 c;
    Row2 alpha;   // C_d A_d^2
    double gamma; // C_d A_d B_d

    /// A_d = [[0, 1], [-wn^2, -2 zeta wn]], B_d = [0, wn^2]^T (unit DC gain).
    static DesiredDynamics from_spec(double zeta, double omega_n);

    /// Accepts explicit matrices; A_d must be Hurwitz and in the state form above.
    static DesiredDynamics from_matrices(const Mat2& a, const Vec2& b, const Row2& c);

    /// C_d (-A_d)^-1 B_d
    double dc_gain() const;
    Vec2 steady_state(double y_t) const;
};

/// One step of zdot_d = A_d z_d + B_d y_t, integrated with the same
/// semi-implicit chain-of-integrators update the agents use.
Vec2 desired_step(const DesiredDynamics& d, const Vec2& z_d, double y_t, double dt);

/// ybar_d'' in normal form: alpha_d z_d + gamma_d y_t.
double desired_accel(const DesiredDynamics& d, const Vec2& z_d, double y_t);

/// Task-level (average output) feedback designed from a Riccati solution.
struct TaskLevelLaw {
    DesiredDynamics desired;
    Mat2 p_c;

    /// Solves P (A_c + B_c alpha_d) + (A_c + B_c alpha_d)^T P - P B_c B_c^T P + Q = 0.
    static TaskLevelLaw design(const DesiredDynamics& desired, const Mat2& q_care);
};

/// Commanded average acceleration alpha_d zbar + gamma_d y_t - 1/2 B_c^T P_c (zbar - z_d).
double task_level_accel(const Vec2& zbar, const Vec2& z_d, double y_t, const TaskLevelLaw& law);

/// Lyapunov certificate (zbar - z_d)^T P_c (zbar - z_d).
double task_lyapunov(const Vec2& zbar, const Vec2& z_d, const Mat2& p_c);

struct ControlParams {
    double eta = 7.41;
    double y_t = 5.0;
    Vector s;  // sharing ratios, on the simplex

    int agents() const { return static_cast<int>(s.size()); }
    void validate() const;
};

/// Node-level law for agent i (0-based):
/// u_i = accel + (ybar_hat - y_hat_i) + eta (ybar_hat' - y_hat_i') - y_t (1/N - s_i).
double node_control(int i, const Vec2& z_hat_i, const Vec2& zbar_hat, double accel, const ControlParams& params);

/// Stacked law: u = accel 1 + (1/N) (y_t L s - L y_hat - eta L y_hat').
Vector ensemble_control(const Vector& y_hat, const Vector& ydot_hat, double accel, const ControlParams& params,
                        const Laplacian& lap);

/// Splits u into its span{1} component and the orthogonal remainder.
std::pair<Vector, Vector> decompose_control(const Vector& u);

}  // namespace synsim
