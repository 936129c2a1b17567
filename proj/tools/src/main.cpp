#include <charconv>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "synsim/trial_io.hpp"
#include "synsim_cli/commands.hpp"

namespace {

using namespace synsim;
using namespace synsim::cli;

TimeWindow parse_window(const std::string& text, const char* flag) {
    const std::size_t colon = text.find(':');
    const auto a = colon == std::string::npos ? std::nullopt : parse_double(std::string_view(text).substr(0, colon));
    const auto b = colon == std::string::npos ? std::nullopt : parse_double(std::string_view(text).substr(colon + 1));
    if (!a || !b || !(*a < *b)) throw UsageError(std::string(flag) + " expects A:B with A < B, got '" + text + "'");
    return {*a, *b};
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw UsageError(std::string(source) + " must be a non-negative integer, got '" + text + "'");
    }
    return v;
}

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string out;
    std::string steady;
    std::string transient;
};

void add_config_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON config file (keys are TrialConfig field names)");
    cmd->add_option("--set", c.overrides, "Override one config key, key=value (repeatable)");
    cmd->add_option("--seed", c.seed, "Master seed (falls back to SYNSIM_SEED, then the config)");
}

void add_window_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--window-steady", c.steady, "Steady-state window A:B in seconds");
    cmd->add_option("--window-transient", c.transient, "Transient window A:B in seconds");
}

// defaults < config file < flags
TrialConfig resolve_config(const Common& c) {
    TrialConfig cfg = TrialConfig::nominal();
    if (!c.config_path.empty()) cfg = load_config_file(c.config_path, cfg);
    for (const std::string& o : c.overrides) cfg = apply_override(cfg, o);
    if (!c.seed.empty()) {
        cfg.seed = parse_seed(c.seed, "--seed");
    } else if (const char* env = std::getenv("SYNSIM_SEED"); env && *env) {
        cfg.seed = parse_seed(env, "SYNSIM_SEED");
    }
    if (!c.steady.empty()) cfg.steady_window = parse_window(c.steady, "--window-steady");
    if (!c.transient.empty()) cfg.transient_window = parse_window(c.transient, "--window-transient");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synsim: collaborative force-tracking ensembles and synergy analysis"};
    app.require_subcommand(1);

    Common sim_c;
    int trials = 182;
    unsigned threads = 0;
    auto* sim = app.add_subcommand("simulate", "Run an ensemble of trials and write trial files");
    add_config_flags(sim, sim_c);
    add_window_flags(sim, sim_c);
    sim->add_option("--trials", trials, "Number of trials")->default_val(182);
    sim->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
    sim->add_option("--out", sim_c.out, "Output directory")->required();

    Common rep_c;
    std::string replicate_arg;
    int runs = 5;
    std::string reference;
    auto* rep = app.add_subcommand("replicate", "Repeat one parameter set and compare with a reference");
    add_config_flags(rep, rep_c);
    rep->add_option("--replicate", replicate_arg, "zeta=..,wn=..,eta=..,s=a,b,c,d")->required();
    rep->add_option("--runs", runs, "Number of repeated runs")->default_val(5);
    rep->add_option("--reference", reference, "Reference trial file or force CSV (default: noise-free run)");
    rep->add_option("--out", rep_c.out, "Output directory")->required();

    Common an_c;
    std::vector<std::string> inputs, ingest;
    std::string rmse_on = "average", signal = "estimate", pooling = "across";
    double cutoff = 15.0;
    std::string report_reference;
    auto add_analysis = [&](CLI::App* cmd) {
        add_window_flags(cmd, an_c);
        cmd->add_option("inputs", inputs, "Simulator trial files");
        cmd->add_option("--ingest", ingest, "Wide force CSV files (time, f1..fN)");
        cmd->add_option("--rmse-on", rmse_on, "RMSE of the average or the total output")
            ->check(CLI::IsMember({"average", "total"}));
        cmd->add_option("--signal", signal, "Analyze filter estimates or true forces of trial files")
            ->check(CLI::IsMember({"estimate", "truth"}));
        cmd->add_option("--pooling", pooling, "PCA/UCM across trials or within each trial")
            ->check(CLI::IsMember({"across", "within"}));
        cmd->add_option("--cutoff-hz", cutoff, "Low-pass cutoff for ingested recordings (0 disables)");
        cmd->add_option("--out", an_c.out, "Output directory")->required();
    };
    auto* ana = app.add_subcommand("analyze", "Compute RMSE, PCA and UCM statistics");
    add_analysis(ana);
    auto* rpt = app.add_subcommand("report", "Analyze and draw SVG figures");
    add_analysis(rpt);
    rpt->add_option("--reference", report_reference, "Reference trial file or force CSV for the comparison plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (sim->parsed()) {
            SimulateOptions o;
            o.config = resolve_config(sim_c);
            o.trials = trials;
            o.threads = threads;
            o.out = sim_c.out;
            return cmd_simulate(o, std::cout, std::cerr);
        }
        if (rep->parsed()) {
            ReplicateOptions o;
            o.config = resolve_config(rep_c);
            o.params = parse_replicate(replicate_arg);
            o.runs = runs;
            o.out = rep_c.out;
            if (!reference.empty()) o.reference = reference;
            return cmd_replicate(o, std::cout, std::cerr);
        }
        AnalyzeOptions a;
        a.inputs.assign(inputs.begin(), inputs.end());
        a.ingest.assign(ingest.begin(), ingest.end());
        a.analysis.rmse_on = rmse_on == "total" ? RmseOn::total : RmseOn::average;
        a.analysis.signal = signal == "truth" ? Signal::truth : Signal::estimate;
        a.analysis.pooling = pooling == "within" ? Pooling::within_trial : Pooling::across_trials;
        if (!an_c.steady.empty()) {
            a.analysis.steady = parse_window(an_c.steady, "--window-steady");
            a.steady_from_flags = true;
        }
        if (!an_c.transient.empty()) {
            a.transient = parse_window(an_c.transient, "--window-transient");
            a.transient_from_flags = true;
        }
        a.cutoff_hz = cutoff;
        a.out = an_c.out;
        if (ana->parsed()) return cmd_analyze(a, std::cout, std::cerr);
        ReportOptions r;
        r.analyze = std::move(a);
        if (!report_reference.empty()) r.reference = report_reference;
        return cmd_report(r, std::cout, std::cerr);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
