#include "synsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "synsim/analysis.hpp"

namespace synsim {

namespace {

constexpr double kBlowUpForce = 1e3;
// Shares given to four decimals can miss 1 by a few 1e-4; they are renormalized.
constexpr double kShareSumSlack = 1e-3;

}  // namespace

Matrix nominal_sharing_covariance() {
    Matrix c(4, 4);
    c << 0.0242, 0.0038, -0.0069, -0.0106,
         0.0038, 0.0217, -0.0072, -0.0087,
        -0.0069, -0.0072, 0.0270, -0.0015,
        -0.0106, -0.0087, -0.0015, 0.0335;
    return c;
}

DesiredDynamics nominal_desired_dynamics() {
    Mat2 a;
    a << 0.0, 1.0, -82.0, -13.04;
    return DesiredDynamics::from_matrices(a, Vec2(0.0, 82.004), Row2(1.0, 0.0));
}

TrialConfig TrialConfig::nominal() { return TrialConfig{}; }

long TrialConfig::steps() const { return std::lround(duration / dt); }

void TrialConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid trial config: " + what); };
    if (N < 1) fail("N must be at least 1");
    if (!std::isfinite(y_t)) fail("y_t must be finite");
    if (!(dt > 0.0) || !(duration > 0.0)) fail("dt and duration must be positive");
    if (std::abs(static_cast<double>(steps()) * dt - duration) > 1e-9 * duration) fail("dt must divide duration");
    if (!(eta > 0.0)) fail("eta must be positive");
    if (!(R > 0.0)) fail("R must be positive");
    if (sensor_variance && !(*sensor_variance >= 0.0)) fail("sensor_variance must be non-negative");
    if (zeta.has_value() != omega_n.has_value()) fail("zeta and omega_n must be given together");
    if (A_d.has_value() != B_d.has_value()) fail("A_d and B_d must be given together");
    if (C_m.rows() != N || C_m.cols() != N) fail("C_m must be N x N");
    if (s) {
        if (s->size() != N) fail("s must have N entries");
        if ((s->array() < 0.0).any() || std::abs(s->sum() - 1.0) > kShareSumSlack) {
            fail("s must be non-negative and sum to 1");
        }
    }
    if (record_stride < 1) fail("record_stride must be at least 1");
    for (const TimeWindow& w : {steady_window, transient_window}) {
        if (!(w.begin >= 0.0) || !(w.end <= duration + 1e-9) || !(w.begin < w.end)) {
            fail("analysis windows must lie within [0, duration]");
        }
    }
    if (asymmetry(P0) > Tolerances::symmetry) fail("P0 must be symmetric");
    if (edges) {
        Graph g(N);
        try {
            g = graph();
        } catch (const std::exception& e) {
            fail(std::string("edges: ") + e.what());
        }
        if (!is_connected(g)) fail("the interaction graph must be connected");
    }
}

DesiredDynamics TrialConfig::desired() const {
    if (A_d) return DesiredDynamics::from_matrices(*A_d, *B_d, C_d.value_or(Row2(1.0, 0.0)));
    if (zeta) return DesiredDynamics::from_spec(*zeta, *omega_n);
    return nominal_desired_dynamics();
}

NoiseConfig TrialConfig::noise() const { return {Q_noise, R, sensor_variance.value_or(R)}; }

Graph TrialConfig::graph() const {
    if (edges) return Graph(N, *edges);
    return complete_graph(N);
}

namespace {

// Between sensor samples the noise-free closed loop is linear in the stacked
// state x = [z_1..z_N, zhat_1..zhat_N, z_d]; it is advanced with its exact
// transition over one step.
class ClosedLoop {
public:
    ClosedLoop(int n, const TaskLevelLaw& law, const ControlParams& params, const Laplacian& lap)
        : n_(n), law_(law), params_(params), lap_(lap) {}

    Eigen::Index dim() const { return 4 * n_ + 2; }

    Vector control(const Vector& x, double* accel_out = nullptr) const {
        Vector y_hat(n_), ydot_hat(n_);
        Vec2 zbar = Vec2::Zero();
        for (int i = 0; i < n_; ++i) {
            const Vec2 zh = x.segment<2>(2 * n_ + 2 * i);
            y_hat(i) = zh(0);
            ydot_hat(i) = zh(1);
            zbar += zh;
        }
        zbar /= static_cast<double>(n_);
        const double accel = task_level_accel(zbar, x.tail<2>(), params_.y_t, law_);
        if (accel_out) *accel_out = accel;
        return ensemble_control(y_hat, ydot_hat, accel, params_, lap_);
    }

    Vector derivative(const Vector& x) const {
        const Vector u = control(x);
        Vector dx(dim());
        for (int i = 0; i < n_; ++i) {
            dx(2 * i) = x(2 * i + 1);
            dx(2 * i + 1) = u(i);
            dx(2 * n_ + 2 * i) = x(2 * n_ + 2 * i + 1);
            dx(2 * n_ + 2 * i + 1) = u(i);
        }
        const Vec2 z_d = x.tail<2>();
        dx.tail<2>() = law_.desired.a * z_d + law_.desired.b * params_.y_t;
        return dx;
    }

    // x+ = phi x + offset, from the exponential of the affine generator.
    void transition(double dt, Matrix& phi, Vector& offset) const {
        const Eigen::Index d = dim();
        const Vector zero = Vector::Zero(d);
        const Vector g = derivative(zero);
        Matrix gen = Matrix::Zero(d + 1, d + 1);
        for (Eigen::Index j = 0; j < d; ++j) {
            Vector e = zero;
            e(j) = 1.0;
            gen.col(j).head(d) = derivative(e) - g;
        }
        gen.col(d).head(d) = g;
        const Matrix full = (gen * dt).exp();
        if (!full.allFinite()) throw NumericalError("closed-loop transition overflowed; reduce the time step");
        phi = full.topLeftCorner(d, d);
        offset = full.col(d).head(d);
    }

private:
    int n_;
    const TaskLevelLaw& law_;
    const ControlParams& params_;
    const Laplacian& lap_;
};

}  // namespace

TrialRecord run_trial(const TrialConfig& cfg, int trial_index) {
    cfg.validate();
    const int n = cfg.N;
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(trial_index));

    ControlParams params;
    params.eta = cfg.eta;
    params.y_t = cfg.y_t;
    if (cfg.s) {
        params.s = *cfg.s / cfg.s->sum();
    } else if (n == 1) {
        params.s = Vector::Ones(1);
    } else {
        params.s = sample_sharing_ratios(n, cfg.C_m, rng);
    }
    params.validate();

    const TaskLevelLaw law = TaskLevelLaw::design(cfg.desired(), cfg.Q_care);
    const Laplacian lap(cfg.graph());
    const Matrix coupling = lap.matrix() / static_cast<double>(n);
    const NoiseConfig noise_cfg = cfg.noise();
    const NoiseModel noise(noise_cfg);
    const CovariancePropagator covariance(noise_cfg, cfg.dt);
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);

    const ClosedLoop loop(n, law, params, lap);
    Matrix phi;
    Vector offset;
    loop.transition(dt, phi, offset);

    // x = [z_1..z_N, zhat_1..zhat_N, z_d]; everything starts at rest.
    Vector x = Vector::Zero(loop.dim());
    std::vector<Mat2> p(static_cast<std::size_t>(n), cfg.P0);

    const long steps = cfg.steps();
    const Eigen::Index samples = steps / cfg.record_stride + 1;

    TrialRecord rec;
    rec.config = cfg;
    rec.trial_index = trial_index;
    rec.seed = cfg.seed;
    rec.s = params.s;
    rec.time.resize(samples);
    rec.y.resize(samples, n);
    rec.y_hat.resize(samples, n);
    rec.ydot_hat.resize(samples, n);
    rec.u.resize(samples, n);
    rec.ybar_hat.resize(samples);
    rec.z_d.resize(samples, 2);

    Vector y_hat(n), ydot_hat(n);
    double prev_task = 0.0, prev_consensus = 0.0;
    Certificates& cert = rec.certificates;

    for (long k = 0; k <= steps; ++k) {
        for (int i = 0; i < n; ++i) {
            AgentState a;
            a.z = x.segment<2>(2 * i);
            a.z_hat = x.segment<2>(2 * n + 2 * i);
            a.p = p[i];
            const double y_meas = measure(a, noise_cfg.sensor_variance, rng);
            x.segment<2>(2 * n + 2 * i) = kalman_correct(std::move(a), y_meas, noise_cfg.r).z_hat;
        }
        Vec2 zbar = Vec2::Zero();
        for (int i = 0; i < n; ++i) {
            y_hat(i) = x(2 * n + 2 * i);
            ydot_hat(i) = x(2 * n + 2 * i + 1);
            zbar += x.segment<2>(2 * n + 2 * i);
        }
        zbar /= static_cast<double>(n);
        const Vec2 z_d = x.tail<2>();

        const Vector u = loop.control(x);
        const auto [u_par, u_perp] = decompose_control(u);
        cert.decomposition_error = std::max({cert.decomposition_error, (u_par + u_perp - u).cwiseAbs().maxCoeff(),
                                             std::abs(u_perp.sum())});

        const double v_task = task_lyapunov(zbar, z_d, law.p_c);
        const PsiState psi = psi_and_disagreement(y_hat, ydot_hat, params.s, cfg.y_t);
        const double v_consensus = consensus_lyapunov(psi.delta, psi.delta_dot, coupling);
        if (k > 0) {
            cert.task_max_increase = std::max(cert.task_max_increase, (v_task - prev_task) / (1.0 + prev_task));
            cert.consensus_max_increase =
                std::max(cert.consensus_max_increase, (v_consensus - prev_consensus) / (1.0 + prev_consensus));
        }
        prev_task = v_task;
        prev_consensus = v_consensus;

        if (k % cfg.record_stride == 0) {
            const Eigen::Index row = k / cfg.record_stride;
            rec.time(row) = static_cast<double>(k) * dt;
            for (int i = 0; i < n; ++i) rec.y(row, i) = x(2 * i);
            rec.y_hat.row(row) = y_hat.transpose();
            rec.ydot_hat.row(row) = ydot_hat.transpose();
            rec.u.row(row) = u.transpose();
            rec.ybar_hat(row) = zbar(0);
            rec.z_d.row(row) = z_d.transpose();
        }
        if (k == steps) break;

        x = phi * x + offset;
        for (int i = 0; i < n; ++i) {
            x.segment<2>(2 * i) += sqrt_dt * noise.process_draw(rng);
            p[i] = covariance.advance(p[i]);
            if (!(std::abs(x(2 * i)) <= kBlowUpForce)) {
                std::ostringstream os;
                os << "trial " << trial_index << ": force of agent " << i << " diverged at t = " << (k + 1) * dt
                   << " s; try a smaller dt";
                throw SimulationError(os.str(), trial_index);
            }
        }
    }
    return rec;
}

std::vector<TrialRecord> run_ensemble(const TrialConfig& cfg, int n_trials, unsigned threads) {
    if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
    cfg.validate();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_trials));

    std::vector<TrialRecord> out(static_cast<std::size_t>(n_trials));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_trials));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int idx = next++; idx < n_trials; idx = next++) {
            try {
                out[idx] = run_trial(cfg, idx);
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (int idx = 0; idx < n_trials; ++idx) {
        if (!errors[idx]) continue;
        try {
            std::rethrow_exception(errors[idx]);
        } catch (const SimulationError&) {
            throw;
        } catch (const std::exception& e) {
            throw SimulationError("trial " + std::to_string(idx) + ": " + e.what(), idx);
        }
    }
    return out;
}

TrialRecord average_records(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw std::invalid_argument("nothing to average");
    TrialRecord avg = records.front();
    for (std::size_t k = 1; k < records.size(); ++k) {
        const TrialRecord& r = records[k];
        if (r.samples() != avg.samples() || r.agents() != avg.agents()) {
            throw std::invalid_argument("records to average must share grid and agent count");
        }
        avg.s += r.s;
        avg.y += r.y;
        avg.y_hat += r.y_hat;
        avg.ydot_hat += r.ydot_hat;
        avg.u += r.u;
        avg.ybar_hat += r.ybar_hat;
        avg.z_d += r.z_d;
        auto& c = avg.certificates;
        c.task_max_increase = std::max(c.task_max_increase, r.certificates.task_max_increase);
        c.consensus_max_increase = std::max(c.consensus_max_increase, r.certificates.consensus_max_increase);
        c.decomposition_error = std::max(c.decomposition_error, r.certificates.decomposition_error);
    }
    if (records.size() > 1) {
        const double inv = 1.0 / static_cast<double>(records.size());
        avg.s *= inv;
        avg.y *= inv;
        avg.y_hat *= inv;
        avg.ydot_hat *= inv;
        avg.u *= inv;
        avg.ybar_hat *= inv;
        avg.z_d *= inv;
    }
    return avg;
}

}  // namespace synsim
