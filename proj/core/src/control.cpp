#include "synsim/control.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace synsim {

namespace {

constexpr double kFormTolerance = 1e-12;

Row2 row(double a, double b) { return Row2(a, b); }

}  // namespace

DesiredDynamics DesiredDynamics::from_spec(double zeta, double omega_n) {
    if (!(zeta > 0.0) || !(omega_n > 0.0) || !std::isfinite(zeta) || !std::isfinite(omega_n)) {
        throw std::invalid_argument("damping ratio and natural frequency must be positive");
    }
    Mat2 a;
    a << 0.0, 1.0, -omega_n * omega_n, -2.0 * zeta * omega_n;
    return from_matrices(a, Vec2(0.0, omega_n * omega_n), row(1.0, 0.0));
}

DesiredDynamics DesiredDynamics::from_matrices(const Mat2& a, const Vec2& b, const Row2& c) {
    if (!a.allFinite() || !b.allFinite() || !c.allFinite()) throw std::invalid_argument("desired dynamics not finite");
    if ((c - row(1.0, 0.0)).cwiseAbs().maxCoeff() > kFormTolerance ||
        (a.row(0) - row(0.0, 1.0)).cwiseAbs().maxCoeff() > kFormTolerance || std::abs(b(0)) > kFormTolerance) {
        throw std::invalid_argument("desired dynamics must have state [y, ydot]: C_d = [1 0], A_d row 0 = [0 1], B_d(0) = 0");
    }
    if (!is_hurwitz(a)) throw std::invalid_argument("desired dynamics A_d must be Hurwitz");
    DesiredDynamics d;
    d.a = a;
    d.b = b;
    d.c = c;
    d.alpha = c * a * a;
    d.gamma = c * a * b;
    return d;
}

double DesiredDynamics::dc_gain() const { return c * (-a).inverse() * b; }

Vec2 DesiredDynamics::steady_state(double y_t) const { return (-a).inverse() * b * y_t; }

double desired_accel(const DesiredDynamics& d, const Vec2& z_d, double y_t) { return d.alpha * z_d + d.gamma * y_t; }

Vec2 desired_step(const DesiredDynamics& d, const Vec2& z_d, double y_t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const double rate = z_d(1) + desired_accel(d, z_d, y_t) * dt;
    return Vec2(z_d(0) + rate * dt, rate);
}

TaskLevelLaw TaskLevelLaw::design(const DesiredDynamics& desired, const Mat2& q_care) {
    const Matrix a = plant::a() + plant::b() * desired.alpha;
    const Matrix b = plant::b();
    return {desired, solve_care(a, b, Matrix(q_care))};
}

double task_level_accel(const Vec2& zbar, const Vec2& z_d, double y_t, const TaskLevelLaw& law) {
    const Vec2 err = zbar - z_d;
    return law.desired.alpha * zbar + law.desired.gamma * y_t - 0.5 * plant::b().dot(law.p_c * err);
}

double task_lyapunov(const Vec2& zbar, const Vec2& z_d, const Mat2& p_c) {
    const Vec2 err = zbar - z_d;
    return err.dot(p_c * err);
}

void ControlParams::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("consensus gain eta must be positive");
    if (!std::isfinite(y_t)) throw std::invalid_argument("target must be finite");
    if (s.size() < 1) throw std::invalid_argument("sharing vector is empty");
    if ((s.array() < 0.0).any() || (s.array() > 1.0).any() || std::abs(s.sum() - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "sharing vector must lie on the simplex (sum " << s.sum() << ")";
        throw std::invalid_argument(os.str());
    }
}

double node_control(int i, const Vec2& z_hat_i, const Vec2& zbar_hat, double accel, const ControlParams& params) {
    const int n = params.agents();
    if (i < 0 || i >= n) throw std::out_of_range("agent index out of range");
    return accel + (zbar_hat(0) - z_hat_i(0)) + params.eta * (zbar_hat(1) - z_hat_i(1)) -
           params.y_t * (1.0 / n - params.s(i));
}

Vector ensemble_control(const Vector& y_hat, const Vector& ydot_hat, double accel, const ControlParams& params,
                        const Laplacian& lap) {
    const Eigen::Index n = params.s.size();
    if (y_hat.size() != n || ydot_hat.size() != n || lap.size() != n) {
        throw std::invalid_argument("ensemble_control: dimension mismatch");
    }
    const Matrix& l = lap.matrix();
    return Vector::Constant(n, accel) + (params.y_t * (l * params.s) - l * y_hat - params.eta * (l * ydot_hat)) /
                                            static_cast<double>(n);
}

std::pair<Vector, Vector> decompose_control(const Vector& u) {
    const double mean = u.size() > 0 ? u.mean() : 0.0;
    Vector parallel = Vector::Constant(u.size(), mean);
    Vector perp = u - parallel;
    return {std::move(parallel), std::move(perp)};
}

}  // namespace synsim
