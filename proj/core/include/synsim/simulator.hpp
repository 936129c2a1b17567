#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "synsim/agent.hpp"
#include "synsim/control.hpp"
#include "synsim/numerics.hpp"
#include "synsim/topology.hpp"

namespace synsim {

struct TimeWindow {
    double begin = 0.0;
    double end = 0.0;

    bool contains(double t) const { return t >= begin - 1e-9 && t <= end + 1e-9; }
};

/// Default sharing covariance for 4 agents.
Matrix nominal_sharing_covariance();

/// Default desired dynamics: A_d = [[0, 1], [-82, -13.04]], B_d = [0, 82.004].
DesiredDynamics nominal_desired_dynamics();

struct TrialConfig {
    int N = 4;
    double y_t = 5.0;
    double duration = 23.0;
    double dt = 1e-3;
    // Desired dynamics: either (zeta, omega_n) or explicit matrices. The
    // explicit matrices win when present.
    std::optional<double> zeta;
    std::optional<double> omega_n;
    std::optional<Mat2> A_d;
    std::optional<Vec2> B_d;
    std::optional<Row2> C_d;
    double eta = 7.41;
    Mat2 Q_noise = 0.095 * Mat2::Identity();
    double R = 2.24;
    std::optional<double> sensor_variance;  // defaults to R
    Matrix C_m = nominal_sharing_covariance();
    Mat2 Q_care = Mat2::Identity();
    Mat2 P0 = Mat2::Identity();
    std::optional<Vector> s;  // fixed sharing vector; sampled per trial when absent
    std::optional<std::vector<Graph::Edge>> edges;  // complete graph when absent
    std::uint64_t seed = 1;
    TimeWindow steady_window{16.0, 23.0};
    TimeWindow transient_window{2.0, 16.0};
    int record_stride = 10;

    static TrialConfig nominal();

    void validate() const;
    DesiredDynamics desired() const;
    NoiseConfig noise() const;
    Graph graph() const;
    long steps() const;
};

/// Largest per-step violation of each runtime certificate within a trial.
struct Certificates {
    double task_max_increase = 0.0;       // task-level Lyapunov function
    double consensus_max_increase = 0.0;  // disagreement Lyapunov function
    double decomposition_error = 0.0;     // |u_par + u_perp - u| and |1^T u_perp|
};

/// Time series of one trial, sampled every record_stride steps.
/// Row k of every matrix corresponds to time(k); columns are agents.
struct TrialRecord {
    TrialConfig config;
    int trial_index = 0;
    std::uint64_t seed = 0;
    Vector s;
    Vector time;
    Matrix y;         // true forces
    Matrix y_hat;     // estimated forces
    Matrix ydot_hat;  // estimated force rates
    Matrix u;         // control inputs
    Vector ybar_hat;  // average estimated force
    Matrix z_d;       // desired state, two columns
    Certificates certificates;

    Eigen::Index samples() const { return time.size(); }
    int agents() const { return static_cast<int>(y.cols()); }
};

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, int trial_index)
        : std::runtime_error(what), trial_index_(trial_index) {}
    int trial_index() const { return trial_index_; }

private:
    int trial_index_;
};

/// Runs one trial. Per step: measure and correct each filter, form the
/// average estimate and the ensemble control, then advance plants, filter
/// means and the desired state together over dt with the exact transition of
/// the continuous closed loop, add process noise (sqrt(dt) N(0, Q)) to the
/// plants and advance each filter covariance. Deterministic in
/// (config.seed, trial_index).
TrialRecord run_trial(const TrialConfig& cfg, int trial_index);

/// Runs trials 0..n_trials-1 (stream id = trial index) on up to `threads`
/// workers. Results are returned in trial-index order.
std::vector<TrialRecord> run_ensemble(const TrialConfig& cfg, int n_trials, unsigned threads = 0);

/// Pointwise average of the series of several records on the same grid.
TrialRecord average_records(const std::vector<TrialRecord>& records);

}  // namespace synsim
