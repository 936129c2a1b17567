#include "synsim/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "synsim/topology.hpp"

namespace synsim {

namespace {

constexpr double kDegenerateVariance = 1e-300;

Matrix demeaned(const Matrix& data) { return data.rowwise() - data.colwise().mean(); }

double unbiased_variance(const Vector& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

void require_rows(const Matrix& data, Eigen::Index min_rows, const char* what) {
    if (data.rows() < min_rows) {
        throw std::invalid_argument(std::string(what) + ": need at least " + std::to_string(min_rows) +
                                    " samples, got " + std::to_string(data.rows()));
    }
}

}  // namespace

PsiState psi_and_disagreement(const Vector& y, const Vector& ydot, const Vector& s, double y_t) {
    const Eigen::Index n = y.size();
    if (ydot.size() != n || s.size() != n || n == 0) throw std::invalid_argument("psi: dimension mismatch");
    const double inv_n = 1.0 / static_cast<double>(n);
    PsiState out;
    out.psi1 = (y - y_t * s) * inv_n;
    out.psi2 = ydot * inv_n;
    out.delta = out.psi1.array() - out.psi1.mean();
    out.delta_dot = out.psi2.array() - out.psi2.mean();
    return out;
}

double consensus_lyapunov(const Vector& delta, const Vector& delta_dot, const Matrix& lap) {
    if (delta.size() != delta_dot.size() || lap.rows() != delta.size() || lap.cols() != delta.size()) {
        throw std::invalid_argument("consensus_lyapunov: dimension mismatch");
    }
    return 0.5 * delta.dot(lap * delta) + 0.5 * delta_dot.squaredNorm();
}

Matrix window_rows(const Vector& time, const Matrix& data, const TimeWindow& window) {
    if (time.size() != data.rows()) throw std::invalid_argument("time and data lengths differ");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index k = 0; k < time.size(); ++k) {
        if (window.contains(time(k))) rows.push_back(k);
    }
    Matrix out(static_cast<Eigen::Index>(rows.size()), data.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = data.row(rows[k]);
    return out;
}

double rmse(const Vector& time, const Vector& values, double target, const TimeWindow& window) {
    const Matrix w = window_rows(time, values, window);
    if (w.rows() == 0) throw std::invalid_argument("rmse: empty window");
    return std::sqrt((w.array() - target).square().mean());
}

Matrix sample_covariance(const Matrix& data) {
    require_rows(data, 2, "sample covariance");
    const Matrix centered = demeaned(data);
    Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
    return 0.5 * (cov + cov.transpose());
}

Matrix sharing_covariance(const std::vector<Matrix>& windowed_trials) {
    if (windowed_trials.size() < 2) throw std::invalid_argument("sharing covariance needs at least two trials");
    Matrix sum = Matrix::Zero(windowed_trials.front().cols(), windowed_trials.front().cols());
    for (const Matrix& trial : windowed_trials) {
        if (trial.cols() != sum.cols()) throw std::invalid_argument("trials differ in agent count");
        sum += sample_covariance(trial);
    }
    return sum / static_cast<double>(windowed_trials.size());
}

Matrix sharing_covariance(const std::vector<TrialRecord>& records, const TimeWindow& window) {
    std::vector<Matrix> windows;
    windows.reserve(records.size());
    for (const TrialRecord& r : records) windows.push_back(window_rows(r.time, r.y, window));
    return sharing_covariance(windows);
}

PcaResult pca(const Matrix& data) {
    require_rows(data, 5, "pca");
    const SymEig eig = sym_eig(sample_covariance(data));
    const Eigen::Index n = eig.values.size();
    PcaResult out;
    out.components.resize(n, n);
    out.explained.resize(n);
    const Vector clipped = eig.values.cwiseMax(0.0);
    const double total = clipped.sum();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;  // descending
        out.components.col(k) = eig.vectors.col(src);
        out.explained(k) = total > 0.0 ? clipped(src) / total : 0.0;
    }
    return out;
}

double angle_with_span1(const Vector& v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw std::invalid_argument("angle_with_span1: zero vector");
    const double cosine = std::min(1.0, std::abs(v.sum()) / (norm * std::sqrt(static_cast<double>(v.size()))));
    return std::acos(cosine) * 180.0 / std::numbers::pi;
}

Matrix ucm_basis(int n) {
    if (n < 2) throw std::invalid_argument("ucm basis needs n >= 2");
    std::vector<Vector> basis;
    basis.push_back(Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
    for (int k = 0; k < n - 1; ++k) {
        Vector v = Vector::Unit(n, k);
        for (const Vector& b : basis) v -= b.dot(v) * b;
        for (const Vector& b : basis) v -= b.dot(v) * b;  // second pass for orthogonality
        basis.push_back(v.normalized());
    }
    Matrix out(n, n - 1);
    for (int k = 0; k < n - 1; ++k) out.col(k) = basis[static_cast<std::size_t>(k + 1)];
    return out;
}

std::optional<double> synergy_index(double v_ucm, double v_ort, int n) {
    const double v_tot = v_ucm + v_ort;
    if (!(v_tot > kDegenerateVariance) || n < 2) return std::nullopt;
    return (v_ucm / (n - 1) - v_ort) / (v_tot / n);
}

UcmResult ucm_analysis(const Matrix& data, const Matrix& basis) {
    require_rows(data, 5, "ucm analysis");
    const Eigen::Index n = data.cols();
    if (basis.rows() != n || basis.cols() != n - 1) throw std::invalid_argument("ucm basis has wrong shape");
    const Matrix centered = demeaned(data);
    const Vector ort = centered * Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const Matrix ucm = centered * basis;
    UcmResult out;
    out.v_ort = unbiased_variance(ort);
    for (Eigen::Index k = 0; k < ucm.cols(); ++k) out.v_ucm += unbiased_variance(ucm.col(k));
    out.v_tot = out.v_ucm + out.v_ort;
    out.delta_v = synergy_index(out.v_ucm, out.v_ort, static_cast<int>(n));
    return out;
}

UcmResult ucm_analysis(const Matrix& data) { return ucm_analysis(data, ucm_basis(static_cast<int>(data.cols()))); }

double second_order_step(double zeta, double omega_n, double t) {
    if (t <= 0.0) return 0.0;
    const double gap = zeta - 1.0;
    if (std::abs(gap) < 1e-6) return 1.0 - std::exp(-omega_n * t) * (1.0 + omega_n * t);
    if (zeta < 1.0) {
        const double root = std::sqrt(1.0 - zeta * zeta);
        const double wd = omega_n * root;
        return 1.0 - std::exp(-zeta * omega_n * t) * (std::cos(wd * t) + zeta / root * std::sin(wd * t));
    }
    const double root = std::sqrt(zeta * zeta - 1.0);
    const double s1 = -omega_n * (zeta - root);
    const double s2 = -omega_n * (zeta + root);
    return 1.0 + (s2 * std::exp(s1 * t) - s1 * std::exp(s2 * t)) / (s1 - s2);
}

namespace {

struct StepFitProblem {
    const Vector& time;
    const Vector& series;
    double target;
    Eigen::Index stride;

    double loss(double zeta, double omega_n) const {
        if (!(zeta > 0.0) || !(omega_n > 0.0)) return std::numeric_limits<double>::infinity();
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index k = 0; k < time.size(); k += stride) {
            const double r = series(k) - target * second_order_step(zeta, omega_n, time(k));
            sum += r * r;
            ++count;
        }
        return sum / static_cast<double>(count);
    }
};

// Nelder-Mead on (zeta, omega_n).
std::array<double, 2> refine(const StepFitProblem& problem, std::array<double, 2> start) {
    using Point = std::array<double, 2>;
    std::array<Point, 3> simplex{start, Point{start[0] * 1.05 + 1e-3, start[1]},
                                 Point{start[0], start[1] * 1.05 + 1e-3}};
    std::array<double, 3> f{};
    for (int k = 0; k < 3; ++k) f[k] = problem.loss(simplex[k][0], simplex[k][1]);

    auto blend = [](const Point& a, const Point& b, double t) {
        return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
    };
    for (int it = 0; it < 400; ++it) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
        const Point best = simplex[order[0]], mid = simplex[order[1]], worst = simplex[order[2]];
        const double fb = f[order[0]], fm = f[order[1]], fw = f[order[2]];
        const double size = std::abs(worst[0] - best[0]) + std::abs(worst[1] - best[1]) +
                            std::abs(mid[0] - best[0]) + std::abs(mid[1] - best[1]);
        if (size < 1e-10) break;

        const Point centroid{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
        const Point reflected = blend(centroid, worst, -1.0);
        const double fr = problem.loss(reflected[0], reflected[1]);
        Point next = worst;
        double fnext = fw;
        if (fr < fb) {
            const Point expanded = blend(centroid, worst, -2.0);
            const double fe = problem.loss(expanded[0], expanded[1]);
            if (fe < fr) {
                next = expanded;
                fnext = fe;
            } else {
                next = reflected;
                fnext = fr;
            }
        } else if (fr < fm) {
            next = reflected;
            fnext = fr;
        } else {
            const Point contracted = blend(centroid, worst, fr < fw ? -0.5 : 0.5);
            const double fc = problem.loss(contracted[0], contracted[1]);
            if (fc < std::min(fr, fw)) {
                next = contracted;
                fnext = fc;
            } else {
                simplex = {best, blend(best, mid, 0.5), blend(best, worst, 0.5)};
                for (int k = 0; k < 3; ++k) f[k] = problem.loss(simplex[k][0], simplex[k][1]);
                continue;
            }
        }
        simplex = {best, mid, next};
        f = {fb, fm, fnext};
    }
    const int at = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
    return simplex[at];
}

}  // namespace

SecondOrderFit fit_second_order(const Vector& time, const Vector& series, double target) {
    if (time.size() != series.size() || time.size() < 5) {
        throw std::invalid_argument("fit_second_order: need matching time and series with >= 5 samples");
    }
    if (!(std::abs(target) > 0.0)) throw std::invalid_argument("fit_second_order: target must be non-zero");

    const Eigen::Index coarse_stride = std::max<Eigen::Index>(1, time.size() / 200);
    const StepFitProblem coarse{time, series, target, coarse_stride};
    std::array<double, 2> best{1.0, 10.0};
    double best_loss = std::numeric_limits<double>::infinity();
    for (double zeta = 0.1; zeta <= 3.0 + 1e-9; zeta += 0.1) {
        for (double wn = 1.0; wn <= 30.0 + 1e-9; wn += 0.5) {
            const double l = coarse.loss(zeta, wn);
            if (l < best_loss) {
                best_loss = l;
                best = {zeta, wn};
            }
        }
    }
    const StepFitProblem fine{time, series, target, 1};
    const auto refined = refine(fine, best);

    SecondOrderFit out;
    out.zeta = refined[0];
    out.omega_n = refined[1];
    out.rms_residual = std::sqrt(fine.loss(out.zeta, out.omega_n));
    const double excursion = (series.array() - target).abs().maxCoeff();
    const bool no_step = excursion < 0.05 * std::abs(target);
    out.low_confidence = no_step || out.rms_residual > 0.05 * std::abs(target);
    return out;
}

ForceTrial force_trial_from_record(const TrialRecord& rec, Signal signal) {
    ForceTrial t;
    t.name = "trial_" + std::to_string(rec.trial_index);
    t.time = rec.time;
    t.forces = signal == Signal::estimate ? rec.y_hat : rec.y;
    return t;
}

namespace {

Vector pc_angles(const PcaResult& p) {
    Vector out(p.components.cols());
    for (Eigen::Index k = 0; k < p.components.cols(); ++k) out(k) = angle_with_span1(p.components.col(k));
    return out;
}

double trial_rmse(const ForceTrial& t, const AnalysisOptions& opts) {
    const double n = static_cast<double>(t.forces.cols());
    if (opts.rmse_on == RmseOn::total) return rmse(t.time, t.forces.rowwise().sum(), n * opts.target, opts.steady);
    return rmse(t.time, t.forces.rowwise().mean(), opts.target, opts.steady);
}

TrialSynergy analyze_one(const ForceTrial& trial, const AnalysisOptions& opts) {
    TrialSynergy out;
    out.name = trial.name;
    out.rmse = trial_rmse(trial, opts);
    const Matrix window = window_rows(trial.time, trial.forces, opts.steady);
    out.mean_forces = window.colwise().mean().transpose();
    out.ucm = ucm_analysis(window);
    out.pca = pca(window);
    out.angles_deg = pc_angles(out.pca);
    return out;
}

SynergyReport summarize(std::vector<TrialSynergy> per_trial, const AnalysisOptions& opts) {
    if (per_trial.empty()) throw std::invalid_argument("no trials to summarize");
    SynergyReport rep;
    rep.trials = static_cast<int>(per_trial.size());
    const Eigen::Index n = per_trial.front().mean_forces.size();
    for (const TrialSynergy& t : per_trial) {
        if (t.mean_forces.size() != n) throw std::invalid_argument("trials differ in agent count");
        rep.rmse_mean += t.rmse;
    }
    const double count = static_cast<double>(rep.trials);
    rep.rmse_mean /= count;
    if (rep.trials > 1) {
        double ss = 0.0;
        for (const TrialSynergy& t : per_trial) ss += (t.rmse - rep.rmse_mean) * (t.rmse - rep.rmse_mean);
        rep.rmse_sd = std::sqrt(ss / (count - 1.0));
        rep.rmse_stderr = rep.rmse_sd / std::sqrt(count);
    }

    rep.pooling = opts.pooling == Pooling::across_trials && rep.trials >= kMinPooledTrials ? Pooling::across_trials
                                                                                           : Pooling::within_trial;
    if (rep.pooling == Pooling::across_trials) {
        Matrix means(rep.trials, n);
        for (int k = 0; k < rep.trials; ++k) means.row(k) = per_trial[k].mean_forces.transpose();
        const UcmResult u = ucm_analysis(means);
        const PcaResult p = pca(means);
        rep.v_ucm = u.v_ucm;
        rep.v_ort = u.v_ort;
        rep.pca_explained = p.explained;
        rep.pca_angles_deg = pc_angles(p);
    } else {
        rep.pca_explained = Vector::Zero(n);
        rep.pca_angles_deg = Vector::Zero(n);
        for (const TrialSynergy& t : per_trial) {
            rep.v_ucm += t.ucm.v_ucm;
            rep.v_ort += t.ucm.v_ort;
            rep.pca_explained += t.pca.explained;
            rep.pca_angles_deg += t.angles_deg;
        }
        rep.v_ucm /= count;
        rep.v_ort /= count;
        rep.pca_explained /= count;
        rep.pca_angles_deg /= count;
    }
    rep.v_tot = rep.v_ucm + rep.v_ort;
    rep.delta_v = synergy_index(rep.v_ucm, rep.v_ort, static_cast<int>(n));
    rep.per_trial = std::move(per_trial);
    return rep;
}

}  // namespace

SynergyReport synergy_report(const std::vector<TrialRecord>& records, const AnalysisOptions& opts) {
    std::vector<TrialSynergy> per_trial;
    per_trial.reserve(records.size());
    for (const TrialRecord& r : records) {
        per_trial.push_back(analyze_one(force_trial_from_record(r, opts.signal), opts));
    }
    return summarize(std::move(per_trial), opts);
}

SynergyReport synergy_report(const std::vector<ForceTrial>& trials, const AnalysisOptions& opts) {
    std::vector<TrialSynergy> per_trial;
    per_trial.reserve(trials.size());
    for (const ForceTrial& t : trials) per_trial.push_back(analyze_one(t, opts));
    return summarize(std::move(per_trial), opts);
}

}  // namespace synsim
