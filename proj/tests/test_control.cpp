#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synsim/control.hpp"
#include "synsim/simulator.hpp"

namespace {

using namespace synsim;

TEST(DesiredDynamics, CriticallyDampedUnitSystem) {
    const DesiredDynamics d = DesiredDynamics::from_spec(1.0, 1.0);
    Mat2 a;
    a << 0, 1, -1, -2;
    EXPECT_EQ(d.a, a);
    EXPECT_EQ(d.b, Vec2(0.0, 1.0));
    EXPECT_DOUBLE_EQ(d.dc_gain(), 1.0);
}

TEST(DesiredDynamics, RejectsBadInputs) {
    EXPECT_THROW(DesiredDynamics::from_spec(0.0, 1.0), std::invalid_argument);
    Mat2 unstable;
    unstable << 0, 1, 1, 0;
    EXPECT_THROW(DesiredDynamics::from_matrices(unstable, Vec2(0, 1), Row2(1, 0)), std::invalid_argument);
}

TEST(DesiredDynamics, NormalFormCoefficients) {
    const DesiredDynamics d = nominal_desired_dynamics();
    EXPECT_EQ(d.alpha, Row2(-82.0, -13.04));
    EXPECT_DOUBLE_EQ(d.gamma, 82.004);
    EXPECT_NEAR(d.dc_gain(), 82.004 / 82.0, 1e-14);
}

TEST(DesiredDynamics, StepOvershoot) {
    const double zeta = 0.72, wn = 9.055;
    const DesiredDynamics d = DesiredDynamics::from_spec(zeta, wn);
    Vec2 z = Vec2::Zero();
    double peak = 0.0;
    for (int k = 0; k < 20000; ++k) {
        z = desired_step(d, z, 1.0, 1e-4);
        peak = std::max(peak, z(0));
    }
    const double expected = std::exp(-M_PI * zeta / std::sqrt(1 - zeta * zeta));
    EXPECT_NEAR(peak - 1.0, expected, 0.002);
    EXPECT_NEAR(expected, 0.038, 0.001);
}

TEST(DesiredDynamics, SteadyStateIsFixedPoint) {
    const DesiredDynamics d = nominal_desired_dynamics();
    const Vec2 ss = d.steady_state(5.0);
    EXPECT_LT((desired_step(d, ss, 5.0, 1e-3) - ss).norm(), 1e-12);
    EXPECT_NEAR(ss(0), 5.0 * 82.004 / 82.0, 1e-12);
}

TEST(DesiredDynamics, ConvergesToDcGainFromRest) {
    const DesiredDynamics d = nominal_desired_dynamics();
    Vec2 z = Vec2::Zero();
    for (int k = 0; k < 10000; ++k) z = desired_step(d, z, 5.0, 1e-3);
    EXPECT_NEAR(z(0), 5.0 * 82.004 / 82.0, 1e-9);
}

TaskLevelLaw nominal_law() { return TaskLevelLaw::design(nominal_desired_dynamics(), Mat2::Identity()); }

TEST(TaskLevel, CareResidual) {
    const TaskLevelLaw law = nominal_law();
    const Mat2 a = plant::a() + plant::b() * law.desired.alpha;
    EXPECT_LT(care_residual(a, plant::b(), Mat2::Identity(), law.p_c).norm(), Tolerances::care_residual);
}

TEST(TaskLevel, ZeroErrorGivesDesiredNormalForm) {
    const TaskLevelLaw law = nominal_law();
    const Vec2 zd(1.3, -0.4);
    EXPECT_DOUBLE_EQ(task_level_accel(zd, zd, 5.0, law), desired_accel(law.desired, zd, 5.0));
    EXPECT_NEAR(task_level_accel(Vec2::Zero(), Vec2::Zero(), 5.0, law), 410.02, 1e-10);
}

TEST(TaskLevel, LyapunovNonIncreasingAlongClosedLoop) {
    const TaskLevelLaw law = nominal_law();
    // RK4 on [zbar, z_d] from a disturbed start
    using Vec4 = Eigen::Matrix<double, 4, 1>;
    auto f = [&](const Vec4& x) {
        const Vec2 zbar = x.head<2>(), zd = x.tail<2>();
        Vec4 dx;
        dx.head<2>() = plant::a() * zbar + plant::b() * task_level_accel(zbar, zd, 5.0, law);
        dx.tail<2>() = law.desired.a * zd + law.desired.b * 5.0;
        return dx;
    };
    Vec4 x;
    x << 2.0, -3.0, 0.0, 0.0;
    const double h = 1e-3;
    double prev = task_lyapunov(x.head<2>(), x.tail<2>(), law.p_c);
    for (int k = 0; k < 5000; ++k) {
        const Vec4 k1 = f(x), k2 = f(x + h / 2 * k1), k3 = f(x + h / 2 * k2), k4 = f(x + h * k3);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        const double v = task_lyapunov(x.head<2>(), x.tail<2>(), law.p_c);
        ASSERT_LE(v, prev + 1e-14) << "step " << k;
        prev = v;
    }
    EXPECT_LT(prev, 1e-6);
}

ControlParams params_for(Vector s, double eta = 7.41) {
    ControlParams p;
    p.eta = eta;
    p.s = std::move(s);
    return p;
}

TEST(NodeControl, SingleAgentGetsAverageAcceleration) {
    const ControlParams p = params_for(Vector::Ones(1));
    const Vec2 z(1.0, 2.0);
    EXPECT_EQ(node_control(0, z, z, 3.25, p), 3.25);
}

TEST(NodeControl, IdenticalAgentsUniformShares) {
    const ControlParams p = params_for(Vector::Constant(4, 0.25));
    const Vec2 z(2.0, 0.5);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(node_control(i, z, z, -1.5, p), -1.5);
}

TEST(ControlParams, RejectsOffSimplex) {
    Vector s(3);
    s << 0.5, 0.6, -0.1;
    EXPECT_THROW(params_for(s).validate(), std::invalid_argument);
    s << 0.2, 0.2, 0.2;
    EXPECT_THROW(params_for(s).validate(), std::invalid_argument);
    EXPECT_THROW(params_for(Vector::Constant(2, 0.5), 0.0).validate(), std::invalid_argument);
}

TEST(EnsembleControl, ConsensusReachedGivesPureTaskLevel) {
    Vector s(4);
    s << 0.1, 0.2, 0.3, 0.4;
    const ControlParams p = params_for(s);
    const Laplacian lap(complete_graph(4));
    const Vector y_hat = p.y_t * s + Vector::Constant(4, 0.7);
    const Vector u = ensemble_control(y_hat, Vector::Zero(4), 2.5, p, lap);
    EXPECT_LT((u - Vector::Constant(4, 2.5)).cwiseAbs().maxCoeff(), 1e-13);
}

// Pairwise-sum form of the node law on the complete graph.
double pairwise_form(int i, const Vector& y, const Vector& yd, double accel, const ControlParams& p) {
    const int n = p.agents();
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += (y(j) - y(i)) + p.eta * (yd(j) - yd(i)) - p.y_t * (p.s(j) - p.s(i));
    return accel + acc / n;
}

TEST(EnsembleControl, ThreeFormsAgreeOnRandomStates) {
    RngStream rng(31, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + trial % 7;
        Vector s(n);
        for (int i = 0; i < n; ++i) s(i) = rng.uniform() + 1e-3;
        s /= s.sum();
        ControlParams p = params_for(s, 0.5 + 10 * rng.uniform());
        p.y_t = 10 * rng.uniform();
        Vector y(n), yd(n);
        for (int i = 0; i < n; ++i) y(i) = 5 * rng.normal(), yd(i) = 5 * rng.normal();
        const double accel = 10 * rng.normal();
        Vec2 zbar(y.mean(), yd.mean());
        const Vector ens = ensemble_control(y, yd, accel, p, Laplacian(complete_graph(n)));
        for (int i = 0; i < n; ++i) {
            const double node = node_control(i, Vec2(y(i), yd(i)), zbar, accel, p);
            worst = std::max({worst, std::abs(node - ens(i)), std::abs(node - pairwise_form(i, y, yd, accel, p))});
        }
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Decomposition, Examples) {
    const Vector c = Vector::Constant(4, 1.5);
    auto [par, perp] = decompose_control(c);
    EXPECT_LT((par - c).norm(), 1e-15);
    EXPECT_LT(perp.norm(), 1e-15);

    Vector z(4);
    z << 1, -2, 0.5, 0.5;
    std::tie(par, perp) = decompose_control(z);
    EXPECT_LT(par.norm(), 1e-15);
    EXPECT_LT((perp - z).norm(), 1e-15);
}

TEST(Decomposition, ReconstructsAndPermutesCovariantly) {
    RngStream rng(32, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + trial % 9;
        Vector u(n);
        for (int i = 0; i < n; ++i) u(i) = 100 * rng.normal();
        const auto [par, perp] = decompose_control(u);
        EXPECT_LT((par + perp - u).cwiseAbs().maxCoeff(), Tolerances::decomposition * (1 + u.cwiseAbs().maxCoeff()));
        EXPECT_LT(std::abs(perp.sum()), Tolerances::decomposition * (1 + u.cwiseAbs().sum()));

        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::rotate(idx.begin(), idx.begin() + trial % n, idx.end());
        Vector up(n);
        for (int i = 0; i < n; ++i) up(i) = u(idx[i]);
        const auto [par_p, perp_p] = decompose_control(up);
        for (int i = 0; i < n; ++i) {
            EXPECT_NEAR(par_p(i), par(0), 1e-10);
            EXPECT_NEAR(perp_p(i), perp(idx[i]), 1e-10);
        }
    }
}

}  // namespace
