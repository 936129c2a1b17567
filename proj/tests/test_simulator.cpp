#include <gtest/gtest.h>

#include <cmath>

#include "synsim/analysis.hpp"
#include "synsim/simulator.hpp"
#include "synsim/trial_io.hpp"
#include "test_support.hpp"

namespace {

using namespace synsim;
using synsim::testing::noise_free;
using synsim::testing::four_decimal_shares;
using synsim::testing::second_order_oracle;

TEST(TrialConfig, ValidationErrors) {
    auto bad = [](auto mutate) {
        TrialConfig cfg;
        mutate(cfg);
        EXPECT_THROW(cfg.validate(), std::invalid_argument);
    };
    bad([](TrialConfig& c) { c.N = 0; });
    bad([](TrialConfig& c) { c.dt = 0.0; });
    bad([](TrialConfig& c) { c.R = -1.0; });
    bad([](TrialConfig& c) { c.record_stride = 0; });
    bad([](TrialConfig& c) { c.steady_window = {10.0, 30.0}; });
    bad([](TrialConfig& c) { c.edges = std::vector<Graph::Edge>{{0, 1}, {2, 3}}; });
    bad([](TrialConfig& c) {
        Vector s(4);
        s << 0.5, 0.5, 0.5, -0.5;
        c.s = s;
    });
    bad([](TrialConfig& c) { c.s = Vector::Constant(4, 0.3); });
    TrialConfig ok;
    ok.s = four_decimal_shares();  // sums to 0.9999
    EXPECT_NO_THROW(ok.validate());
}

TEST(RunTrial, UniformSharesNoiseFree) {
    TrialConfig cfg = noise_free();
    cfg.s = Vector::Constant(4, 0.25);
    const TrialRecord r = run_trial(cfg, 0);
    const Eigen::Index last = r.samples() - 1;
    EXPECT_DOUBLE_EQ(r.time(last), 23.0);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.y(last, i), 5.0, 1e-3);

    double worst = 0.0;
    for (Eigen::Index k = 0; k < r.samples(); ++k) {
        if (r.time(k) < 1.0) continue;
        worst = std::max(worst, std::abs(r.ybar_hat(k) - second_order_oracle(82.0, 13.04, 82.004, 5.0, r.time(k))));
    }
    EXPECT_LT(worst, 1e-3);
}

TEST(RunTrial, FourDecimalSharesApproachPredictedSplit) {
    // The disagreement decays with the slow consensus pole
    // (-eta + sqrt(eta^2 - 4)) / 2, so the split settles well after 23 s.
    TrialConfig cfg = noise_free();
    cfg.s = four_decimal_shares();
    cfg.duration = 80.0;
    const TrialRecord r = run_trial(cfg, 0);
    const Eigen::Index last = r.samples() - 1;
    const Vector s = *cfg.s / cfg.s->sum();
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.y(last, i), 5.0 * (s(i) + 0.75), 1e-3);

    const double eta = cfg.eta, slow = (-eta + std::sqrt(eta * eta - 4)) / 2;
    auto gap = [&](double t) {
        const Eigen::Index k = std::lround(t / (cfg.dt * cfg.record_stride));
        return std::abs(r.y(k, 2) - r.y(last, 2));
    };
    EXPECT_NEAR(gap(40.0) / gap(30.0), std::exp(slow * 10.0), 0.01 * std::exp(slow * 10.0));
}

TEST(RunTrial, NoiseFreeCertificatesAndDisagreement) {
    TrialConfig cfg = noise_free();
    cfg.s = four_decimal_shares();
    const TrialRecord r = run_trial(cfg, 0);
    EXPECT_LE(r.certificates.task_max_increase, Tolerances::lyapunov_slack);
    EXPECT_LE(r.certificates.consensus_max_increase, Tolerances::lyapunov_slack);
    EXPECT_LT(r.certificates.decomposition_error, Tolerances::decomposition);

    // ||delta|| non-increasing along the recorded trajectory
    double prev = INFINITY;
    for (Eigen::Index k = 0; k < r.samples(); ++k) {
        const PsiState psi = psi_and_disagreement(r.y_hat.row(k).transpose(), r.ydot_hat.row(k).transpose(), r.s, 5.0);
        const double v = consensus_lyapunov(psi.delta, psi.delta_dot, laplacian(complete_graph(4)).matrix() / 4.0);
        ASSERT_LE(v, prev + 1e-12);
        prev = v;
    }
}

TEST(RunTrial, AverageEstimateIsMeanOfEstimates) {
    const TrialRecord r = run_trial(TrialConfig{}, 3);
    for (Eigen::Index k = 0; k < r.samples(); ++k) ASSERT_NEAR(r.ybar_hat(k), r.y_hat.row(k).mean(), 1e-13);
    EXPECT_LT(r.certificates.decomposition_error, Tolerances::decomposition);
}

TEST(RunTrial, NoisyPerTrialRmseBand) {
    for (int idx = 0; idx < 5; ++idx) {
        const TrialRecord r = run_trial(TrialConfig{}, idx);
        const double e = rmse(r.time, r.ybar_hat, 5.0, r.config.steady_window);
        EXPECT_GT(e, 0.05);
        EXPECT_LT(e, 0.5);
        EXPECT_NEAR(r.s.sum(), 1.0, 1e-12);
    }
}

TEST(RunTrial, DeterministicInSeedAndIndex) {
    const TrialConfig cfg;
    EXPECT_EQ(serialize_trial(run_trial(cfg, 4)), serialize_trial(run_trial(cfg, 4)));
    EXPECT_NE(serialize_trial(run_trial(cfg, 4)), serialize_trial(run_trial(cfg, 5)));
}

TEST(RunTrial, HalvingTimeStepConverges) {
    TrialConfig a = noise_free();
    a.s = four_decimal_shares();
    TrialConfig b = a;
    b.dt = a.dt / 2;
    b.record_stride = a.record_stride * 2;
    const TrialRecord ra = run_trial(a, 0), rb = run_trial(b, 0);
    ASSERT_EQ(ra.samples(), rb.samples());
    EXPECT_LT((ra.y - rb.y).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LT((ra.ybar_hat - rb.ybar_hat).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(RunTrial, BlowUpReportsTrial) {
    TrialConfig cfg = noise_free();
    cfg.y_t = 1e5;
    try {
        run_trial(cfg, 2);
        FAIL() << "expected divergence";
    } catch (const SimulationError& e) {
        EXPECT_EQ(e.trial_index(), 2);
        EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
    }
}

TEST(RunEnsemble, SingleTrialEqualsRunTrial) {
    TrialConfig cfg;
    cfg.duration = 3.0;
    cfg.steady_window = {2.0, 3.0};
    cfg.transient_window = {0.0, 2.0};
    const auto one = run_ensemble(cfg, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(serialize_trial(one[0]), serialize_trial(run_trial(cfg, 0)));
    EXPECT_THROW(run_ensemble(cfg, 0), std::invalid_argument);
}

TEST(RunEnsemble, ThreadCountDoesNotChangeResults) {
    TrialConfig cfg;
    cfg.duration = 2.0;
    cfg.steady_window = {1.0, 2.0};
    cfg.transient_window = {0.0, 1.0};
    const auto a = run_ensemble(cfg, 6, 1), b = run_ensemble(cfg, 6, 3);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(serialize_trial(a[i]), serialize_trial(b[i]));
}

TEST(AverageRecords, SingleRecordUnchanged) {
    TrialConfig cfg;
    cfg.duration = 2.0;
    cfg.steady_window = {1.0, 2.0};
    cfg.transient_window = {0.0, 1.0};
    const TrialRecord r = run_trial(cfg, 0);
    const TrialRecord avg = average_records({r});
    EXPECT_EQ(avg.y, r.y);
    EXPECT_EQ(avg.ybar_hat, r.ybar_hat);
}

}  // namespace
