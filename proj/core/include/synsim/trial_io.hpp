#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "synsim/simulator.hpp"

namespace synsim {

/// Malformed input; line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, int line, int column, const std::string& what);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class UnsupportedVersion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kTrialFormatVersion = 1;

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Strict full-string parse of a double; std::nullopt on failure.
std::optional<double> parse_double(std::string_view text);

/// Canonical single-line JSON for a config. Keys are the TrialConfig field
/// names; unset optional fields are omitted.
std::string config_to_json(const TrialConfig& cfg);

/// Applies the keys present in `json_text` on top of `base`. Unknown keys
/// and wrongly-shaped values are rejected.
TrialConfig config_from_json(std::string_view json_text, const TrialConfig& base = TrialConfig{});

/// Applies one "key=value" override where value is JSON (bare strings allowed).
TrialConfig apply_override(const TrialConfig& base, std::string_view assignment);

TrialConfig load_config_file(const std::filesystem::path& path, const TrialConfig& base = TrialConfig{});

/// Self-describing text: "# key: value" header lines followed by a wide CSV
/// of the recorded series. Numbers use format_double so round trips are exact.
void save_trial(const TrialRecord& rec, const std::filesystem::path& path);
std::string serialize_trial(const TrialRecord& rec);

TrialRecord load_trial(const std::filesystem::path& path);
TrialRecord parse_trial(std::string_view text, const std::string& source = "<memory>");

}  // namespace synsim
