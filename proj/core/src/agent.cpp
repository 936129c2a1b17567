#include "synsim/agent.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>
#include <sstream>
#include <stdexcept>

namespace synsim {

namespace {

constexpr double kPsdRoundoff = 1e-6;

void require_step(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive and finite");
}

// Shared by the plant and the filter prediction so that a noise-free filter
// with exact initialization reproduces the plant bit for bit.
Vec2 integrate(const Vec2& z, double u, double dt) {
    const double rate = z(1) + u * dt;
    return Vec2(z(0) + rate * dt, rate);
}

}  // namespace

NoiseModel::NoiseModel(const NoiseConfig& cfg) : cfg_(cfg) {
    if (!(cfg.r > 0.0)) throw std::invalid_argument("measurement variance R must be positive");
    if (!(cfg.sensor_variance >= 0.0)) throw std::invalid_argument("sensor variance must be non-negative");
    const GaussianSampler sampler(Vector::Zero(2), cfg.q_noise);
    factor_ = sampler.factor();
}

Vec2 NoiseModel::process_draw(RngStream& rng) const {
    const double a = rng.normal();
    const double b = rng.normal();
    return factor_ * Vec2(a, b);
}

AgentState step_true_dynamics(AgentState state, double u, double dt, const NoiseModel& noise, RngStream& rng) {
    require_step(dt);
    if (!std::isfinite(u)) throw std::invalid_argument("control input is not finite");
    const Vec2 w = noise.process_draw(rng);
    const double sq = std::sqrt(dt);
    const double rate = state.z(1) + u * dt + sq * w(1);
    state.z = Vec2(state.z(0) + rate * dt + sq * w(0), rate);
    return state;
}

double measure(const AgentState& state, double sensor_variance, RngStream& rng) {
    const double v = rng.normal();
    return state.z(0) + std::sqrt(sensor_variance) * v;
}

AgentState kalman_correct(AgentState state, double y_meas, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("R must be positive");
    const Vec2 gain = state.p.col(0) / (r + state.p(0, 0));
    state.z_hat += gain * (y_meas - state.z_hat(0));
    return state;
}

Mat2 riccati_rate(const Mat2& p, const NoiseConfig& noise, double dt) {
    require_step(dt);
    const Mat2 a = plant::a();
    const Vec2 pc = p.col(0);
    return a * p + p * a.transpose() + noise.q_noise - pc * pc.transpose() / (noise.r * dt);
}

CovariancePropagator::CovariancePropagator(const NoiseConfig& noise, double dt) : dt_(dt) {
    require_step(dt);
    if (!(noise.r > 0.0)) throw std::invalid_argument("R must be positive");
    // With P = Y X^-1: Xdot = -A^T X + C^T R^-1 C Y, Ydot = Q X + A Y.
    const Mat2 a = plant::a();
    const Mat2 s = plant::c().transpose() * plant::c() / (noise.r * dt);
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h.topLeftCorner<2, 2>() = -a.transpose();
    h.topRightCorner<2, 2>() = s;
    h.bottomLeftCorner<2, 2>() = noise.q_noise;
    h.bottomRightCorner<2, 2>() = a;

    // exp(H dt) is badly conditioned when R is tiny, so build the flow over a
    // short sub-step and double it. Each flow is kept as the triple
    // P -> psi + phi P (I + gamma P)^-1 phi^T with psi, gamma PSD.
    const double norm = h.cwiseAbs().rowwise().sum().maxCoeff() * dt;
    const int doublings = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
    const Eigen::Matrix4d f = (h * std::ldexp(dt, -doublings)).exp();
    if (!f.allFinite()) throw NumericalError("covariance propagator overflowed; reduce the time step");
    const Mat2 f11_inv = f.topLeftCorner<2, 2>().inverse();
    gamma_ = f11_inv * f.topRightCorner<2, 2>();
    psi_ = f.bottomLeftCorner<2, 2>() * f11_inv;
    phi_ = f11_inv.transpose();
    gamma_ = 0.5 * (gamma_ + gamma_.transpose());
    psi_ = 0.5 * (psi_ + psi_.transpose());

    const Mat2 eye = Mat2::Identity();
    for (int k = 0; k < doublings; ++k) {
        const Mat2 w = (eye + psi_ * gamma_).inverse();
        const Mat2 gamma = gamma_ + phi_.transpose() * gamma_ * w * phi_;
        const Mat2 psi = psi_ + phi_ * psi_ * w.transpose() * phi_.transpose();
        phi_ = phi_ * w * phi_;
        gamma_ = 0.5 * (gamma + gamma.transpose());
        psi_ = 0.5 * (psi + psi.transpose());
    }
    if (!phi_.allFinite() || !gamma_.allFinite() || !psi_.allFinite()) {
        throw NumericalError("covariance propagator overflowed; reduce the time step");
    }
}

Mat2 CovariancePropagator::advance(const Mat2& p) const {
    Mat2 next = psi_ + phi_ * p * (Mat2::Identity() + gamma_ * p).inverse() * phi_.transpose();
    next = 0.5 * (next + next.transpose());

    Eigen::SelfAdjointEigenSolver<Mat2> es;
    es.computeDirect(next);
    const Vec2 lambda = es.eigenvalues();
    const double scale = std::max(1.0, std::abs(lambda(1)));
    if (!next.allFinite() || lambda(0) < -kPsdRoundoff * scale) {
        std::ostringstream os;
        os << "filter covariance lost positive semidefiniteness (min eigenvalue " << lambda(0)
           << "); reduce the time step";
        throw NumericalError(os.str());
    }
    if (lambda(0) < 0.0) {
        next = es.eigenvectors() * lambda.cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    }
    return next;
}

AgentState kalman_predict(AgentState state, double u, const CovariancePropagator& cov) {
    state.p = cov.advance(state.p);
    state.z_hat = integrate(state.z_hat, u, cov.dt());
    return state;
}

AgentState kalman_predict(AgentState state, double u, const NoiseConfig& noise, double dt) {
    return kalman_predict(std::move(state), u, CovariancePropagator(noise, dt));
}

AgentState kalman_step(AgentState state, double u, double y_meas, const NoiseConfig& noise, double dt) {
    return kalman_predict(kalman_correct(std::move(state), y_meas, noise.r), u, noise, dt);
}

Mat2 steady_state_covariance(const NoiseConfig& noise, double dt) {
    require_step(dt);
    const Matrix a = plant::a().transpose();
    const Matrix b = plant::c().transpose() / std::sqrt(noise.r * dt);
    const Matrix q = noise.q_noise;
    return solve_care(a, b, q);
}

}  // namespace synsim
