// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synsim/analysis.hpp"
#include "synsim/simulator.hpp"
#include "synsim/trial_io.hpp"
#include "synsim_cli/commands.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;
using namespace synsim;
using synsim::testing::noise_free;
using synsim::testing::four_decimal_shares;
using synsim::testing::second_order_oracle;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (detail.tellp() > 0) detail << "; ";
        detail << what << (ok ? "" : " [x]");
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Nominal ensemble shared by criteria 1-3.
struct Ensemble {
    SynergyReport report;
    double seconds = 0.0;
};

const Ensemble& nominal_ensemble() {
    static const Ensemble e = [] {
        Ensemble out;
        const auto t0 = std::chrono::steady_clock::now();
        const auto records = run_ensemble(TrialConfig::nominal(), 182);
        out.report = synergy_report(records, AnalysisOptions{});
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }();
    return e;
}

void check_rmse_reproduction(Outcome& o) {
    const Ensemble& e = nominal_ensemble();
    o.require(e.report.rmse_mean >= 0.13 && e.report.rmse_mean <= 0.30, "rmse mean " + num(e.report.rmse_mean) + " in [0.13, 0.30]");
    o.require(e.report.rmse_sd >= 0.04 && e.report.rmse_sd <= 0.15, "rmse spread " + num(e.report.rmse_sd) + " in [0.04, 0.15]");
    o.require(e.seconds < 60.0, "runtime " + num(e.seconds) + " s < 60 s");
}

void check_synergy_index(Outcome& o) {
    const SynergyReport& r = nominal_ensemble().report;
    const double dv = r.delta_v.value_or(NAN);
    o.require(dv >= 1.15 && dv <= 1.40, "dV " + num(dv) + " in [1.15, 1.40]");
    o.require(r.v_ort < 0.02, "V_ORT " + num(r.v_ort) + " < 0.02");
    o.require(r.v_ucm >= 1.5 && r.v_ucm <= 4.0, "V_UCM " + num(r.v_ucm) + " in [1.5, 4.0]");
}

void check_pca_structure(Outcome& o) {
    const SynergyReport& r = nominal_ensemble().report;
    const Eigen::Index last = r.pca_explained.size() - 1;
    o.require(r.pca_angles_deg(last) < 6.0, "smallest PC angle " + num(r.pca_angles_deg(last)) + " deg < 6");
    o.require(r.pca_explained(last) < 0.02, "smallest PC explains " + num(100 * r.pca_explained(last)) + "% < 2%");
    const double top3 = r.pca_explained.head(3).sum();
    o.require(top3 > 0.97, "top-3 explain " + num(100 * top3) + "% > 97%");
}

void check_noise_free_exactness(Outcome& o) {
    TrialConfig cfg = noise_free();
    cfg.s = four_decimal_shares();
    const TrialRecord r = run_trial(cfg, 0);
    const Eigen::Index last = r.samples() - 1;
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(r.y(last, i) - 5.0 * ((*cfg.s)(i) + 0.75)));
    o.require(worst < 1e-3, "final force error " + num(worst) + " N < 1e-3");

    double sup = 0.0;
    for (Eigen::Index k = 0; k < r.samples(); ++k) {
        if (r.time(k) < 1.0) continue;
        sup = std::max(sup, std::abs(r.ybar_hat(k) - second_order_oracle(82.0, 13.04, 82.004, 5.0, r.time(k))));
    }
    o.require(sup < 1e-3, "average vs analytic step " + num(sup) + " < 1e-3");
}

void check_algebraic_equivalence(Outcome& o) {
    RngStream rng(101, 0);
    double forms = 0.0, decomposition = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 4;
        ControlParams p;
        p.eta = 0.5 + 10 * rng.uniform();
        p.s = Vector::NullaryExpr(n, [&] { return rng.uniform() + 1e-3; });
        p.s /= p.s.sum();
        const Vector y = Vector::NullaryExpr(n, [&] { return 5 * rng.normal(); });
        const Vector yd = Vector::NullaryExpr(n, [&] { return 5 * rng.normal(); });
        const double accel = 10 * rng.normal();
        const Vector ens = ensemble_control(y, yd, accel, p, Laplacian(complete_graph(n)));
        for (int i = 0; i < n; ++i) {
            double pair = 0.0;
            for (int j = 0; j < n; ++j) pair += (y(j) - y(i)) + p.eta * (yd(j) - yd(i)) - p.y_t * (p.s(j) - p.s(i));
            pair = accel + pair / n;
            const double node = node_control(i, Vec2(y(i), yd(i)), Vec2(y.mean(), yd.mean()), accel, p);
            forms = std::max({forms, std::abs(node - ens(i)), std::abs(node - pair)});
        }
        const auto [par, perp] = decompose_control(ens);
        decomposition = std::max({decomposition, (par + perp - ens).cwiseAbs().maxCoeff(), std::abs(perp.sum())});
    }
    o.require(forms < 1e-12, "max form deviation " + num(forms) + " < 1e-12");
    o.require(decomposition < 1e-12, "decomposition error " + num(decomposition) + " < 1e-12");
}

void check_certificates(Outcome& o) {
    std::vector<TrialConfig> cases;
    TrialConfig a = noise_free();
    a.s = four_decimal_shares();
    cases.push_back(a);
    a.s = Vector::Constant(4, 0.25);
    cases.push_back(a);
    cases.push_back(noise_free());  // sampled shares
    double task = 0.0, consensus = 0.0;
    for (const TrialConfig& c : cases) {
        for (int idx = 0; idx < 3; ++idx) {
            const TrialRecord r = run_trial(c, idx);
            task = std::max(task, r.certificates.task_max_increase);
            consensus = std::max(consensus, r.certificates.consensus_max_increase);
        }
    }
    o.require(task <= Tolerances::lyapunov_slack, "task V max increase " + num(task));
    o.require(consensus <= Tolerances::lyapunov_slack, "consensus V max increase " + num(consensus));

    const TaskLevelLaw law = TaskLevelLaw::design(nominal_desired_dynamics(), Mat2::Identity());
    const double res = care_residual(plant::a() + plant::b() * law.desired.alpha, plant::b(), Mat2::Identity(), law.p_c).norm();
    o.require(res < 1e-8, "CARE residual " + num(res) + " < 1e-8");
}

void check_kalman_consistency(Outcome& o) {
    const NoiseConfig noise;
    const double dt = 1e-3;
    const CovariancePropagator cov(noise, dt);
    Mat2 p = Mat2::Identity();
    for (int k = 0; k < 30000; ++k) p = cov.advance(p);
    const double fixed = (p - steady_state_covariance(noise, dt)).cwiseAbs().maxCoeff();
    o.require(fixed < 1e-4, "long-horizon P vs CARE " + num(fixed) + " < 1e-4");

    const NoiseModel model(noise);
    const GaussianSampler init(Vector::Zero(2), Matrix::Identity(2, 2));
    const int runs = 500, steps = 1000;
    Mat2 err_cov = Mat2::Zero();
    Mat2 p_end;
    for (int run = 0; run < runs; ++run) {
        RngStream rng(202, static_cast<std::uint64_t>(run));
        AgentState truth, est;
        truth.z = init(rng);
        for (int k = 0; k < steps; ++k) {
            const double u = std::sin(0.002 * k);
            est = kalman_correct(est, measure(truth, noise.sensor_variance, rng), noise.r);
            est = kalman_predict(est, u, cov);
            truth = step_true_dynamics(truth, u, dt, model, rng);
        }
        const Vec2 e = truth.z - est.z_hat;
        err_cov += e * e.transpose();
        p_end = est.p;
    }
    err_cov /= runs;
    double rel = 0.0;
    for (int i = 0; i < 2; ++i) rel = std::max(rel, std::abs(err_cov(i, i) / p_end(i, i) - 1.0));
    o.require(rel < 0.2, "Monte Carlo error variance vs P at 1 s, worst relative gap " + num(rel) + " < 0.2");
}

void check_replicate_trial(Outcome& o, const fs::path& golden, const fs::path& scratch) {
    cli::ReplicateOptions opts;
    opts.params = cli::parse_replicate("zeta=0.80,wn=7.86,eta=6,s=0.2562,0.2458,0.2118,0.2861");
    opts.runs = 5;
    opts.out = scratch / "replicate";
    opts.reference = golden;
    std::ostringstream out, err;
    const int rc = cli::cmd_replicate(opts, out, err);
    o.require(rc == cli::kOk, "replicate exit " + std::to_string(rc));
    if (rc != cli::kOk) return;

    const auto j = nlohmann::json::parse(slurp(opts.out / "replicate.json"));
    const double combined = j["rows"][0]["rmse_averaged"].get<double>();
    o.require(j["rows"][0]["force"] == "y_o" && combined < 0.6,
              "combined-output RMSE vs golden " + num(combined) + " N < 0.6");

    const TrialRecord avg = load_trial(opts.out / "averaged.txt");
    const Vector per_finger = avg.y.rowwise().mean();
    const double peak = per_finger.maxCoeff();
    const double settled = window_rows(avg.time, per_finger, {16.0, 23.0}).mean();
    o.require(std::abs(settled - 5.0) < 0.1, "settles at " + num(settled) + " N per finger");
    o.require(peak < 1.1 * settled, "overshoot " + num(100 * (peak / settled - 1)) + "% < 10%");
}

void check_analysis_oracles(Outcome& o) {
    const Vector t = Vector::LinSpaced(2301, 0.0, 23.0);
    double worst_fit = 0.0;
    for (auto [z, w] : {std::pair{0.72, 9.32}, std::pair{0.8, 7.86}, std::pair{0.5, 4.0}}) {
        Vector y(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) y(i) = 5.0 * second_order_oracle(w * w, 2 * z * w, w * w, 1.0, t(i));
        const SecondOrderFit f = fit_second_order(t, y, 5.0);
        worst_fit = std::max({worst_fit, std::abs(f.zeta / z - 1), std::abs(f.omega_n / w - 1)});
    }
    o.require(worst_fit < 0.01, "fit relative error " + num(worst_fit) + " < 1%");

    RngStream rng(303, 0);
    const Matrix c = nominal_sharing_covariance();
    const GaussianSampler g(Vector::Constant(4, 1.25), c);
    std::vector<Matrix> trials;
    for (int k = 0; k < 182; ++k) {
        Matrix m(40, 4);
        for (int r = 0; r < 40; ++r) m.row(r) = g(rng).transpose();
        trials.push_back(std::move(m));
    }
    const double frob = (sharing_covariance(trials) - c).norm() / c.norm();
    o.require(frob < 0.1, "sharing covariance recovery " + num(frob) + " < 10%");

    Matrix within(50, 4), along(50, 4);
    const Matrix basis = ucm_basis(4);
    for (int r = 0; r < 50; ++r) {
        within.row(r) = (basis * Vector::NullaryExpr(3, [&] { return rng.normal(); })).transpose();
        along.row(r).setConstant(rng.normal());
    }
    const double up = *ucm_analysis(within).delta_v, down = *ucm_analysis(along).delta_v;
    o.require(std::abs(up - 4.0 / 3.0) < 1e-12 && std::abs(down + 4.0) < 1e-12,
              "dV limits " + num(up) + " and " + num(down));
}

void check_determinism(Outcome& o, const fs::path& scratch) {
    std::vector<std::string> bytes[2];
    for (int pass = 0; pass < 2; ++pass) {
        // same paths both times, since manifests record their inputs
        const fs::path dir = scratch / "determinism";
        fs::remove_all(dir);
        std::ostringstream out, err;
        cli::SimulateOptions sim{TrialConfig::nominal(), 182, dir / "trials"};
        o.require(cli::cmd_simulate(sim, out, err) == cli::kOk, "simulate run " + std::to_string(pass + 1));
        cli::AnalyzeOptions an;
        for (int k = 0; k < 182; ++k) an.inputs.push_back(dir / "trials" / cli::trial_file_name(k));
        an.out = dir / "report";
        o.require(cli::cmd_analyze(an, out, err) == cli::kOk, "analyze run " + std::to_string(pass + 1));
        for (const fs::path& p : an.inputs) bytes[pass].push_back(slurp(p));
        for (const char* f : {"report.txt", "report.json", "trials.csv", "manifest.json"})
            bytes[pass].push_back(slurp(an.out / f));
        bytes[pass].push_back(slurp(dir / "trials" / "manifest.json"));
    }
    o.require(bytes[0] == bytes[1], std::to_string(bytes[0].size()) + " files byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: synsim_acceptance GOLDEN_REFERENCE [SCRATCH_DIR]\n");
        return 2;
    }
    const fs::path golden = argv[1];
    const fs::path scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "synsim_acceptance";
    fs::create_directories(scratch);

    struct Criterion {
        const char* name;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"RMSE reproduction", check_rmse_reproduction},
        {"synergy index", check_synergy_index},
        {"PCA structure", check_pca_structure},
        {"noise-free exactness", check_noise_free_exactness},
        {"algebraic equivalence", check_algebraic_equivalence},
        {"certificates", check_certificates},
        {"Kalman consistency", check_kalman_consistency},
        {"replicate trial", [&](Outcome& o) { check_replicate_trial(o, golden, scratch); }},
        {"analysis oracles", check_analysis_oracles},
        {"determinism", [&](Outcome& o) { check_determinism(o, scratch); }},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            criteria[k].run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name,
                    o.detail.str().c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
