#pragma once

#include <optional>
#include <string>
#include <vector>

#include "synsim/numerics.hpp"
#include "synsim/simulator.hpp"

namespace synsim {

// ---------------------------------------------------------------------------
// Consensus state

/// Share-deviation coordinates and the disagreement vector.
struct PsiState {
    Vector psi1;       // (y - y_t s) / N
    Vector psi2;       // ydot / N
    Vector delta;      // Pi psi1
    Vector delta_dot;  // Pi psi2
};

PsiState psi_and_disagreement(const Vector& y, const Vector& ydot, const Vector& s, double y_t);

/// 1/2 delta^T L delta + 1/2 |delta_dot|^2
double consensus_lyapunov(const Vector& delta, const Vector& delta_dot, const Matrix& lap);

// ---------------------------------------------------------------------------
// Per-series statistics

/// Rows of `data` whose time stamp lies in the window.
Matrix window_rows(const Vector& time, const Matrix& data, const TimeWindow& window);

double rmse(const Vector& time, const Vector& values, double target, const TimeWindow& window);

/// Unbiased sample covariance of the rows of `data` (T x N).
Matrix sample_covariance(const Matrix& data);

/// Arithmetic mean of the per-trial sample covariances.
Matrix sharing_covariance(const std::vector<Matrix>& windowed_trials);
Matrix sharing_covariance(const std::vector<TrialRecord>& records, const TimeWindow& window);

struct PcaResult {
    Matrix components;  // orthonormal columns, by descending explained variance
    Vector explained;   // fractions summing to 1 (all zero for constant data)
};

PcaResult pca(const Matrix& data);

/// Angle in degrees in [0, 90] between v and span{1}.
double angle_with_span1(const Vector& v);

/// Orthonormal basis (columns) of the complement of span{1}: Gram-Schmidt
/// of e_1..e_{n-1} against 1/sqrt(n).
Matrix ucm_basis(int n);

struct UcmResult {
    double v_ucm = 0.0;
    double v_ort = 0.0;
    double v_tot = 0.0;
    std::optional<double> delta_v;  // empty when the data has no variance
};

/// Synergy index (V_UCM/(N-1) - V_ORT) / (V_TOT/N) with ORT = span{1}.
std::optional<double> synergy_index(double v_ucm, double v_ort, int n);

UcmResult ucm_analysis(const Matrix& data);
UcmResult ucm_analysis(const Matrix& data, const Matrix& ucm_basis_columns);

/// Unit-DC-gain second-order step response at time t.
double second_order_step(double zeta, double omega_n, double t);

struct SecondOrderFit {
    double zeta = 0.0;
    double omega_n = 0.0;
    double rms_residual = 0.0;
    bool low_confidence = false;
};

/// Least-squares fit of target * step(zeta, omega_n, t): grid search over
/// zeta in [0.1, 3], omega_n in [1, 30], then Nelder-Mead refinement.
SecondOrderFit fit_second_order(const Vector& time, const Vector& series, double target);

// ---------------------------------------------------------------------------
// Preprocessing of force recordings

/// Causal second-order Butterworth low-pass (bilinear transform, prewarped).
Vector butterworth_lowpass(const Vector& series, double cutoff_hz, double sample_rate_hz);

/// Force trial in analysis form: one column per finger/agent.
struct ForceTrial {
    std::string name;
    Vector time;
    Matrix forces;
};

struct OutlierReport {
    std::vector<ForceTrial> kept;
    std::vector<std::string> removed;
    std::vector<std::string> reasons;
};

/// Drops trials where any finger's mean force over the window is below 1 N
/// or below 20% of the all-finger average.
OutlierReport outlier_filter(const std::vector<ForceTrial>& trials, const TimeWindow& window);

/// Reads a wide CSV (time, f1..fN). Throws ParseError on malformed input.
ForceTrial load_force_csv(const std::string& path);

/// Median sample spacing converted to Hz.
double infer_sample_rate(const Vector& time);

// ---------------------------------------------------------------------------
// Ensemble report

enum class RmseOn { average, total };
enum class Signal { estimate, truth };

/// across_trials: PCA and UCM on the per-trial steady-window mean forces (one
/// row per trial). within_trial: on each trial's steady-window samples, then
/// averaged over trials.
enum class Pooling { across_trials, within_trial };

struct AnalysisOptions {
    TimeWindow steady{16.0, 23.0};
    double target = 5.0;  // per-agent target
    RmseOn rmse_on = RmseOn::average;
    Signal signal = Signal::estimate;
    Pooling pooling = Pooling::across_trials;
};

/// Across-trial pooling needs this many trials; fewer fall back to within_trial.
inline constexpr int kMinPooledTrials = 5;

struct TrialSynergy {
    std::string name;
    double rmse = 0.0;
    Vector mean_forces;  // steady-window mean per agent
    UcmResult ucm;       // within-trial values
    PcaResult pca;
    Vector angles_deg;
};

struct SynergyReport {
    int trials = 0;
    Pooling pooling = Pooling::across_trials;  // what was actually used
    double rmse_mean = 0.0;
    double rmse_sd = 0.0;      // spread across trials
    double rmse_stderr = 0.0;  // rmse_sd / sqrt(trials)
    double v_ucm = 0.0;
    double v_ort = 0.0;
    double v_tot = 0.0;
    std::optional<double> delta_v;
    Vector pca_explained;
    Vector pca_angles_deg;
    std::vector<TrialSynergy> per_trial;
};

ForceTrial force_trial_from_record(const TrialRecord& rec, Signal signal);

SynergyReport synergy_report(const std::vector<TrialRecord>& records, const AnalysisOptions& opts);

SynergyReport synergy_report(const std::vector<ForceTrial>& trials, const AnalysisOptions& opts);

}  // namespace synsim
