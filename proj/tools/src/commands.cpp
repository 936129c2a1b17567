#include "synsim_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "synsim/trial_io.hpp"
#include "synsim_cli/report_format.hpp"
#include "synsim_cli/svg.hpp"

namespace synsim::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kMaxTrialPlots = 12;

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) throw UsageError("an output directory is required (--out)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Json manifest_base(const std::string& command) {
    Json j;
    j["tool"] = "synsim";
    j["version"] = kToolVersion;
    j["command"] = command;
    return j;
}

void write_manifest(const fs::path& dir, Json manifest, const std::vector<std::string>& outputs) {
    manifest["outputs"] = outputs;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Json config_json(const TrialConfig& cfg) { return Json::parse(config_to_json(cfg)); }

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

Vector interpolate(const Vector& t_src, const Vector& v_src, const Vector& t_dst) {
    Vector out(t_dst.size());
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < t_dst.size(); ++i) {
        const double t = t_dst(i);
        if (t <= t_src(0)) {
            out(i) = v_src(0);
            continue;
        }
        if (t >= t_src(t_src.size() - 1)) {
            out(i) = v_src(v_src.size() - 1);
            continue;
        }
        while (j + 1 < t_src.size() && t_src(j + 1) < t) ++j;
        const double w = (t - t_src(j)) / (t_src(j + 1) - t_src(j));
        out(i) = (1.0 - w) * v_src(j) + w * v_src(j + 1);
    }
    return out;
}

double series_rmse(const Vector& a, const Vector& b) { return std::sqrt((a - b).squaredNorm() / a.size()); }

struct Metric {
    std::string name;
    std::optional<double> value;
};

std::string cell(const std::optional<double>& v) { return v ? fmt6(*v) : "undefined"; }

Json json_value(const std::optional<double>& v) { return v ? Json(round6(*v)) : Json(nullptr); }

const char* signal_name(Signal s) { return s == Signal::estimate ? "estimate" : "truth"; }
const char* pooling_name(Pooling p) { return p == Pooling::across_trials ? "across_trials" : "within_trial"; }
const char* rmse_on_name(RmseOn r) { return r == RmseOn::average ? "average" : "total"; }

struct SourceSummary {
    std::string source;
    std::vector<ForceTrial> trials;
    SynergyReport report;
    std::vector<Metric> metrics;
    std::vector<std::string> removed;
    std::vector<std::string> removed_reasons;
};

Vector combined(const ForceTrial& t) { return t.forces.rowwise().mean(); }

std::vector<Metric> build_metrics(const SynergyReport& rep, const std::vector<ForceTrial>& trials,
                                  const AnalysisOptions& opts, const TimeWindow& transient) {
    std::vector<Metric> m{
        {"trials", rep.trials},
        {"rmse_mean", rep.rmse_mean},
        {"rmse_sd", rep.rmse_sd},
        {"rmse_stderr", rep.rmse_stderr},
        {"v_ucm", rep.v_ucm},
        {"v_ort", rep.v_ort},
        {"v_tot", rep.v_tot},
        {"delta_v", rep.delta_v},
    };
    for (Eigen::Index k = 0; k < rep.pca_explained.size(); ++k) {
        m.push_back({"pc" + std::to_string(k + 1) + "_explained", rep.pca_explained(k)});
    }
    for (Eigen::Index k = 0; k < rep.pca_angles_deg.size(); ++k) {
        m.push_back({"pc" + std::to_string(k + 1) + "_angle_deg", rep.pca_angles_deg(k)});
    }

    std::vector<double> zetas, omegas, transient_var;
    for (const ForceTrial& t : trials) {
        const SecondOrderFit fit = fit_second_order(t.time, combined(t), opts.target);
        if (!fit.low_confidence) {
            zetas.push_back(fit.zeta);
            omegas.push_back(fit.omega_n);
        }
        const Matrix w = window_rows(t.time, t.forces, transient);
        if (w.rows() >= 2) transient_var.push_back(sample_covariance(w).diagonal().mean());
    }
    auto mean_sd = [](const std::vector<double>& v) -> std::pair<std::optional<double>, std::optional<double>> {
        if (v.empty()) return {std::nullopt, std::nullopt};
        double mu = 0.0;
        for (double x : v) mu += x;
        mu /= static_cast<double>(v.size());
        if (v.size() < 2) return {mu, std::nullopt};
        double ss = 0.0;
        for (double x : v) ss += (x - mu) * (x - mu);
        return {mu, std::sqrt(ss / static_cast<double>(v.size() - 1))};
    };
    const auto [zm, zs] = mean_sd(zetas);
    const auto [wm, ws] = mean_sd(omegas);
    const auto [tv, tvs] = mean_sd(transient_var);
    (void)tvs;
    m.push_back({"zeta_fit_mean", zm});
    m.push_back({"zeta_fit_sd", zs});
    m.push_back({"omega_n_fit_mean", wm});
    m.push_back({"omega_n_fit_sd", ws});
    m.push_back({"transient_variance", tv});
    return m;
}

std::optional<SourceSummary> load_source_records(const AnalyzeOptions& opts, std::ostream& err, bool& failed,
                                                 AnalysisOptions& analysis, TimeWindow& transient) {
    if (opts.inputs.empty()) return std::nullopt;
    SourceSummary s;
    s.source = "simulation";
    bool windows_set = false;
    for (const fs::path& p : opts.inputs) {
        try {
            const TrialRecord rec = load_trial(p);
            if (!windows_set) {
                if (!opts.steady_from_flags) analysis.steady = rec.config.steady_window;
                if (!opts.transient_from_flags) transient = rec.config.transient_window;
                windows_set = true;
            }
            ForceTrial t = force_trial_from_record(rec, analysis.signal);
            t.name = p.filename().string();
            s.trials.push_back(std::move(t));
        } catch (const std::exception& e) {
            err << "error: " << p.string() << ": " << e.what() << "\n";
            failed = true;
        }
    }
    return s;
}

std::optional<SourceSummary> load_source_ingest(const AnalyzeOptions& opts, std::ostream& err, bool& failed) {
    if (opts.ingest.empty()) return std::nullopt;
    SourceSummary s;
    s.source = "ingested";
    std::vector<ForceTrial> raw;
    for (const fs::path& p : opts.ingest) {
        try {
            ForceTrial t = load_force_csv(p.string());
            const double fs_hz = infer_sample_rate(t.time);
            if (opts.cutoff_hz > 0.0 && opts.cutoff_hz < 0.5 * fs_hz) {
                for (Eigen::Index c = 0; c < t.forces.cols(); ++c) {
                    t.forces.col(c) = butterworth_lowpass(t.forces.col(c), opts.cutoff_hz, fs_hz);
                }
            }
            t.name = p.filename().string();
            raw.push_back(std::move(t));
        } catch (const std::exception& e) {
            err << "error: " << p.string() << ": " << e.what() << "\n";
            failed = true;
        }
    }
    OutlierReport filtered = outlier_filter(raw, opts.analysis.steady);
    s.trials = std::move(filtered.kept);
    s.removed = std::move(filtered.removed);
    s.removed_reasons = std::move(filtered.reasons);
    return s;
}

struct AnalysisOutput {
    std::vector<SourceSummary> sources;
    AnalysisOptions analysis;
    TimeWindow transient;
    std::vector<std::string> files;
};

// Loads, analyzes and writes report.txt / report.json / trials.csv.
std::optional<AnalysisOutput> analyze_into(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
    if (opts.inputs.empty() && opts.ingest.empty()) throw UsageError("no input files given");
    ensure_dir(opts.out);

    AnalysisOutput res;
    res.analysis = opts.analysis;
    res.transient = opts.transient;
    bool failed = false;
    auto sim = load_source_records(opts, err, failed, res.analysis, res.transient);
    auto ing = load_source_ingest(opts, err, failed);
    if (failed) return std::nullopt;

    for (auto* src : {&sim, &ing}) {
        if (!*src) continue;
        if ((*src)->trials.empty()) {
            err << "error: no usable trials in the " << (*src)->source << " inputs\n";
            return std::nullopt;
        }
        (*src)->report = synergy_report((*src)->trials, res.analysis);
        (*src)->metrics = build_metrics((*src)->report, (*src)->trials, res.analysis, res.transient);
        res.sources.push_back(std::move(**src));
    }

    std::string text;
    Json report;
    Table per_trial({"source", "trial", "rmse", "mean_forces"});
    for (const SourceSummary& s : res.sources) {
        std::ostringstream head;
        head << "source: " << s.source << "  signal: " << signal_name(res.analysis.signal)
             << "  pooling: " << pooling_name(s.report.pooling) << "  rmse on: " << rmse_on_name(res.analysis.rmse_on)
             << "  steady window: " << fmt6(res.analysis.steady.begin) << "-" << fmt6(res.analysis.steady.end)
             << " s\n";
        Table t({"metric", "value"});
        Json metrics;
        for (const Metric& m : s.metrics) {
            t.add_row({m.name, cell(m.value)});
            metrics[m.name] = json_value(m.value);
        }
        text += head.str() + t.text();
        if (!s.removed.empty()) {
            text += "removed by outlier filter:\n";
            for (std::size_t k = 0; k < s.removed.size(); ++k) {
                text += "  " + s.removed[k] + ": " + s.removed_reasons[k] + "\n";
            }
        }
        text += "\n";

        Json section;
        section["signal"] = signal_name(res.analysis.signal);
        section["pooling"] = pooling_name(s.report.pooling);
        section["rmse_on"] = rmse_on_name(res.analysis.rmse_on);
        section["steady_window"] = Json::array({round6(res.analysis.steady.begin), round6(res.analysis.steady.end)});
        section["metrics"] = std::move(metrics);
        Json removed = Json::array();
        for (std::size_t k = 0; k < s.removed.size(); ++k) {
            removed.push_back({{"trial", s.removed[k]}, {"reason", s.removed_reasons[k]}});
        }
        section["removed"] = std::move(removed);
        report[s.source] = std::move(section);

        for (const TrialSynergy& ts : s.report.per_trial) {
            std::string means;
            for (Eigen::Index k = 0; k < ts.mean_forces.size(); ++k) {
                if (k) means += ' ';
                means += fmt6(ts.mean_forces(k));
            }
            per_trial.add_row({s.source, ts.name, fmt6(ts.rmse), means});
        }
    }
    write_text(opts.out / "report.txt", text);
    write_text(opts.out / "report.json", report.dump(2) + "\n");
    write_text(opts.out / "trials.csv", per_trial.csv());
    res.files = {"report.txt", "report.json", "trials.csv"};
    out << text;
    return res;
}

Json analysis_manifest(const AnalyzeOptions& opts, const AnalysisOutput& res) {
    Json j;
    Json inputs = Json::array();
    for (const auto& p : opts.inputs) inputs.push_back(p.string());
    Json ingest = Json::array();
    for (const auto& p : opts.ingest) ingest.push_back(p.string());
    j["inputs"] = std::move(inputs);
    j["ingest"] = std::move(ingest);
    j["signal"] = signal_name(res.analysis.signal);
    j["pooling"] = pooling_name(res.analysis.pooling);
    j["rmse_on"] = rmse_on_name(res.analysis.rmse_on);
    j["target"] = res.analysis.target;
    j["steady_window"] = Json::array({res.analysis.steady.begin, res.analysis.steady.end});
    j["transient_window"] = Json::array({res.transient.begin, res.transient.end});
    j["cutoff_hz"] = opts.cutoff_hz;
    return j;
}

std::string trial_plot(const ForceTrial& t, double target) {
    Plot p;
    p.title = t.name;
    p.x_label = "time (s)";
    p.y_label = "force (N)";
    for (Eigen::Index c = 0; c < t.forces.cols(); ++c) {
        p.series.push_back({"finger " + std::to_string(c + 1), t.time, t.forces.col(c), palette(c)});
    }
    p.series.push_back({"combined (mean)", t.time, combined(t), "#000000"});
    p.hline = target;
    p.hline_label = "target";
    return render_svg(p);
}

std::string scatter_plot(const SourceSummary& s) {
    Plot p;
    p.title = "Mean steady-state force per trial (" + s.source + ")";
    p.x_label = "trial";
    p.y_label = "mean force (N)";
    const auto& per = s.report.per_trial;
    const Eigen::Index n = per.front().mean_forces.size();
    Vector idx(static_cast<Eigen::Index>(per.size()));
    for (std::size_t k = 0; k < per.size(); ++k) idx(static_cast<Eigen::Index>(k)) = static_cast<double>(k + 1);
    for (Eigen::Index c = 0; c < n; ++c) {
        Vector v(static_cast<Eigen::Index>(per.size()));
        for (std::size_t k = 0; k < per.size(); ++k) v(static_cast<Eigen::Index>(k)) = per[k].mean_forces(c);
        Series sr{"finger " + std::to_string(c + 1), idx, v, palette(static_cast<std::size_t>(c))};
        sr.markers_only = true;
        p.series.push_back(std::move(sr));
    }
    return render_svg(p);
}

}  // namespace

std::string trial_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trial_%03d.txt", index);
    return buf;
}

ReplicateParams parse_replicate(const std::string& text) {
    ReplicateParams out;
    std::map<std::string, std::vector<double>> values;
    std::string key;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token.erase(0, token.find_first_not_of(" \t"));
        token.erase(token.find_last_not_of(" \t") + 1);
        if (token.empty()) continue;
        std::string value = token;
        const std::size_t eq = token.find('=');
        if (eq != std::string::npos) {
            key = token.substr(0, eq);
            value = token.substr(eq + 1);
            if (values.count(key)) throw UsageError("--replicate: '" + key + "' given twice");
            values[key];
        } else if (key != "s") {
            throw UsageError("--replicate: unexpected value '" + token + "'");
        }
        const auto v = parse_double(value);
        if (!v) throw UsageError("--replicate: '" + value + "' is not a number");
        values[key].push_back(*v);
    }
    auto scalar = [&](const char* name) {
        const auto it = values.find(name);
        if (it == values.end() || it->second.size() != 1) {
            throw UsageError(std::string("--replicate needs exactly one value for ") + name);
        }
        return it->second.front();
    };
    for (const auto& [k, v] : values) {
        if (k != "zeta" && k != "wn" && k != "eta" && k != "s") throw UsageError("--replicate: unknown key '" + k + "'");
    }
    out.zeta = scalar("zeta");
    out.omega_n = scalar("wn");
    out.eta = scalar("eta");
    const auto it = values.find("s");
    if (it == values.end() || it->second.empty()) throw UsageError("--replicate needs s=a,b,...");
    out.s = Eigen::Map<const Vector>(it->second.data(), static_cast<Eigen::Index>(it->second.size()));
    return out;
}

TrialRecord noise_free_reference(TrialConfig cfg) {
    cfg.Q_noise.setZero();
    cfg.sensor_variance = 0.0;
    return run_trial(cfg, 0);
}

ForceTrial load_forces(const fs::path& path, Signal signal) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string first;
    std::getline(in, first);
    if (first.rfind("# synsim-trial", 0) == 0) {
        ForceTrial t = force_trial_from_record(load_trial(path), signal);
        t.name = path.filename().string();
        return t;
    }
    ForceTrial t = load_force_csv(path.string());
    t.name = path.filename().string();
    return t;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.trials < 1) throw UsageError("--trials must be at least 1");
        opts.config.validate();
        ensure_dir(opts.out);
        const auto records = run_ensemble(opts.config, opts.trials, opts.threads);
        std::vector<std::string> files;
        for (const TrialRecord& r : records) {
            files.push_back(trial_file_name(r.trial_index));
            save_trial(r, opts.out / files.back());
        }
        AnalysisOptions a;
        a.steady = opts.config.steady_window;
        a.target = opts.config.y_t;
        const SynergyReport rep = synergy_report(records, a);

        Json m = manifest_base("simulate");
        m["seed"] = opts.config.seed;
        m["trials"] = opts.trials;
        m["config"] = config_json(opts.config);
        write_manifest(opts.out, std::move(m), files);

        out << "simulated " << opts.trials << " trials (seed " << opts.config.seed << "): steady-state RMSE "
            << fmt6(rep.rmse_mean) << " +/- " << fmt6(rep.rmse_sd) << " N (sd), stderr " << fmt6(rep.rmse_stderr)
            << " N\n";
        return static_cast<int>(kOk);
    });
}

int cmd_replicate(const ReplicateOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.runs < 1) throw UsageError("--runs must be at least 1");
        const ReplicateParams& rp = opts.params;
        TrialConfig cfg = opts.config;
        if (rp.s.size() != cfg.N) throw UsageError("s must have " + std::to_string(cfg.N) + " entries");
        if ((rp.s.array() < 0.0).any() || (rp.s.array() > 1.0).any() || std::abs(rp.s.sum() - 1.0) > 1e-3) {
            throw UsageError("s must lie on the probability simplex (non-negative, summing to 1)");
        }
        if ((rp.s.array() == 0.0).any() || (rp.s.array() == 1.0).any()) {
            err << "warning: sharing vector lies on the simplex boundary (degenerate sharing)\n";
        }
        cfg.zeta = rp.zeta;
        cfg.omega_n = rp.omega_n;
        cfg.A_d.reset();
        cfg.B_d.reset();
        cfg.C_d.reset();
        cfg.eta = rp.eta;
        cfg.s = rp.s;
        cfg.validate();
        ensure_dir(opts.out);

        const auto runs = run_ensemble(cfg, opts.runs);
        const TrialRecord avg = average_records(runs);
        std::vector<std::string> files;
        for (const TrialRecord& r : runs) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "run_%03d.txt", r.trial_index);
            files.push_back(buf);
            save_trial(r, opts.out / files.back());
        }
        save_trial(avg, opts.out / "averaged.txt");
        files.push_back("averaged.txt");

        ForceTrial ref;
        if (opts.reference) {
            ref = load_forces(*opts.reference, Signal::truth);
        } else {
            const TrialRecord r = noise_free_reference(cfg);
            save_trial(r, opts.out / "reference.txt");
            files.push_back("reference.txt");
            ref = force_trial_from_record(r, Signal::truth);
        }
        if (ref.forces.cols() != cfg.N) throw std::invalid_argument("reference has a different agent count");

        const int n = cfg.N;
        auto ref_col = [&](int c) {  // c < 0: combined output
            const Vector v = c < 0 ? Vector(ref.forces.rowwise().sum()) : Vector(ref.forces.col(c));
            return interpolate(ref.time, v, avg.time);
        };
        auto rec_col = [&](const TrialRecord& r, int c) {
            return c < 0 ? Vector(r.y.rowwise().sum()) : Vector(r.y.col(c));
        };

        Table table({"force", "rmse_mean", "rmse_stderr", "rmse_averaged"});
        Json rows = Json::array();
        for (int c = -1; c < n; ++c) {
            const Vector target = ref_col(c);
            std::vector<double> per_run;
            for (const TrialRecord& r : runs) per_run.push_back(series_rmse(rec_col(r, c), target));
            double mu = 0.0;
            for (double v : per_run) mu += v;
            mu /= static_cast<double>(per_run.size());
            double se = 0.0;
            if (per_run.size() > 1) {
                double ss = 0.0;
                for (double v : per_run) ss += (v - mu) * (v - mu);
                se = std::sqrt(ss / static_cast<double>(per_run.size() - 1)) /
                     std::sqrt(static_cast<double>(per_run.size()));
            }
            const double combined_rmse = series_rmse(rec_col(avg, c), target);
            const std::string name = c < 0 ? "y_o" : "y_" + std::to_string(c + 1);
            table.add_row({name, fmt6(mu), fmt6(se), fmt6(combined_rmse)});
            rows.push_back({{"force", name},
                            {"rmse_mean", round6(mu)},
                            {"rmse_stderr", round6(se)},
                            {"rmse_averaged", round6(combined_rmse)}});
        }
        write_text(opts.out / "replicate.txt", table.text());
        write_text(opts.out / "replicate.csv", table.csv());
        write_text(opts.out / "replicate.json", Json{{"runs", opts.runs}, {"rows", rows}}.dump(2) + "\n");
        files.insert(files.end(), {"replicate.txt", "replicate.csv", "replicate.json"});

        Json m = manifest_base("replicate");
        m["seed"] = cfg.seed;
        m["runs"] = opts.runs;
        m["reference"] = opts.reference ? Json(opts.reference->string()) : Json("noise-free simulation");
        m["config"] = config_json(cfg);
        write_manifest(opts.out, std::move(m), files);
        out << table.text();
        return static_cast<int>(kOk);
    });
}

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto res = analyze_into(opts, out, err);
        if (!res) return static_cast<int>(kFailure);
        Json m = manifest_base("analyze");
        m["analysis"] = analysis_manifest(opts, *res);
        write_manifest(opts.out, std::move(m), res->files);
        return static_cast<int>(kOk);
    });
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto res = analyze_into(opts.analyze, out, err);
        if (!res) return static_cast<int>(kFailure);
        const fs::path& dir = opts.analyze.out;
        const double target = res->analysis.target;

        std::optional<ForceTrial> reference;
        if (opts.reference) reference = load_forces(*opts.reference, Signal::truth);

        for (const SourceSummary& s : res->sources) {
            const int plotted = std::min<int>(kMaxTrialPlots, static_cast<int>(s.trials.size()));
            for (int k = 0; k < plotted; ++k) {
                const std::string name = s.source + "_trial_" + std::to_string(k + 1) + ".svg";
                write_text(dir / name, trial_plot(s.trials[k], target));
                res->files.push_back(name);
            }
            const std::string scatter = s.source + "_scatter.svg";
            write_text(dir / scatter, scatter_plot(s));
            res->files.push_back(scatter);

            // Mean combined output across trials on the first trial's grid.
            const Vector& grid = s.trials.front().time;
            Vector mean = Vector::Zero(grid.size());
            for (const ForceTrial& t : s.trials) mean += interpolate(t.time, combined(t), grid);
            mean /= static_cast<double>(s.trials.size());

            Plot p;
            p.x_label = "time (s)";
            p.y_label = "combined force per agent (N)";
            Series sim{s.source + " (mean)", grid, mean, "#1f77b4"};
            sim.dashed = true;
            p.series.push_back(std::move(sim));
            if (reference) {
                p.title = "Comparison with reference";
                p.series.push_back({"reference", reference->time, combined(*reference), "#d62728"});
            } else {
                const SecondOrderFit fit = fit_second_order(grid, mean, target);
                Vector model(grid.size());
                for (Eigen::Index i = 0; i < grid.size(); ++i) {
                    model(i) = target * second_order_step(fit.zeta, fit.omega_n, grid(i));
                }
                p.title = "Comparison with fitted second-order response (zeta " + fmt6(fit.zeta) + ", omega_n " +
                          fmt6(fit.omega_n) + ")";
                p.series.push_back({"second-order fit", grid, model, "#d62728"});
            }
            p.hline = target;
            p.hline_label = "target";
            const std::string cmp = s.source + "_comparison.svg";
            write_text(dir / cmp, render_svg(p));
            res->files.push_back(cmp);
        }

        Json m = manifest_base("report");
        m["analysis"] = analysis_manifest(opts.analyze, *res);
        m["reference"] = opts.reference ? Json(opts.reference->string()) : Json(nullptr);
        write_manifest(dir, std::move(m), res->files);
        return static_cast<int>(kOk);
    });
}

}  // namespace synsim::cli
