#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "synsim/analysis.hpp"
#include "synsim/simulator.hpp"

namespace synsim::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Bad flags or arguments; mapped to kUsage.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulateOptions {
    TrialConfig config;
    int trials = 182;
    std::filesystem::path out;
    unsigned threads = 0;
};

struct ReplicateParams {
    double zeta = 0.0;
    double omega_n = 0.0;
    double eta = 0.0;
    Vector s;
};

/// Parses "zeta=..,wn=..,eta=..,s=a,b,c,d". Values after s= that carry no
/// key belong to s.
ReplicateParams parse_replicate(const std::string& text);

struct ReplicateOptions {
    TrialConfig config;  // base; replicate parameters are applied on top
    ReplicateParams params;
    int runs = 5;
    std::filesystem::path out;
    std::optional<std::filesystem::path> reference;  // trial file or force CSV
};

struct AnalyzeOptions {
    std::vector<std::filesystem::path> inputs;  // simulator trial files
    std::vector<std::filesystem::path> ingest;  // wide force CSVs
    AnalysisOptions analysis;
    bool steady_from_flags = false;
    TimeWindow transient{2.0, 16.0};
    bool transient_from_flags = false;
    double cutoff_hz = 15.0;  // low-pass for ingested recordings
    std::filesystem::path out;
};

struct ReportOptions {
    AnalyzeOptions analyze;
    std::optional<std::filesystem::path> reference;
};

/// Each command writes its outputs plus manifest.json into `out` and
/// returns an ExitCode. Errors are reported on `err`.
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_replicate(const ReplicateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);

/// Noise-free run of `cfg` (Q = 0, exact sensor); used as the replicate reference.
TrialRecord noise_free_reference(TrialConfig cfg);

/// Sum of the agents' forces from a trial file or a force CSV.
ForceTrial load_forces(const std::filesystem::path& path, Signal signal);

std::string trial_file_name(int index);

}  // namespace synsim::cli
