#include "synsim/trial_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace synsim {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kMagic = "# synsim-trial";

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
}

double number(const Json& j, const std::string& key) {
    if (!j.is_number()) bad_value(key, "expected a number");
    return j.get<double>();
}

Matrix matrix_from(const Json& j, const std::string& key, Eigen::Index rows = -1, Eigen::Index cols = -1) {
    if (!j.is_array() || j.empty()) bad_value(key, "expected a nested array");
    const auto r = static_cast<Eigen::Index>(j.size());
    if (!j.front().is_array()) bad_value(key, "expected a nested array");
    const auto c = static_cast<Eigen::Index>(j.front().size());
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) {
        bad_value(key, "expected shape " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) bad_value(key, "ragged matrix");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], key);
    }
    return m;
}

Vector vector_from(const Json& j, const std::string& key, Eigen::Index size = -1) {
    if (!j.is_array()) bad_value(key, "expected an array");
    if (size >= 0 && static_cast<Eigen::Index>(j.size()) != size) {
        bad_value(key, "expected " + std::to_string(size) + " entries");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], key);
    return v;
}

Json to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        out.push_back(std::move(row));
    }
    return out;
}

Json to_json_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    Json out = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

TimeWindow window_from(const Json& j, const std::string& key) {
    const Vector v = vector_from(j, key, 2);
    return {v(0), v(1)};
}

Json config_json(const TrialConfig& c) {
    Json j;
    j["N"] = c.N;
    j["y_t"] = c.y_t;
    j["duration"] = c.duration;
    j["dt"] = c.dt;
    if (c.zeta) j["zeta"] = *c.zeta;
    if (c.omega_n) j["omega_n"] = *c.omega_n;
    if (c.A_d) j["A_d"] = to_json(*c.A_d);
    if (c.B_d) j["B_d"] = to_json_vector(*c.B_d);
    if (c.C_d) j["C_d"] = to_json_vector(c.C_d->transpose());
    j["eta"] = c.eta;
    j["Q_noise"] = to_json(c.Q_noise);
    j["R"] = c.R;
    if (c.sensor_variance) j["sensor_variance"] = *c.sensor_variance;
    j["C_m"] = to_json(c.C_m);
    j["Q_care"] = to_json(c.Q_care);
    j["P0"] = to_json(c.P0);
    if (c.s) j["s"] = to_json_vector(*c.s);
    if (c.edges) {
        Json edges = Json::array();
        for (const auto& [a, b] : *c.edges) edges.push_back(Json::array({a, b}));
        j["edges"] = std::move(edges);
    }
    j["seed"] = c.seed;
    j["steady_window"] = Json::array({c.steady_window.begin, c.steady_window.end});
    j["transient_window"] = Json::array({c.transient_window.begin, c.transient_window.end});
    j["record_stride"] = c.record_stride;
    return j;
}

void apply_key(TrialConfig& c, const std::string& key, const Json& v) {
    auto integer = [&]() -> long long {
        if (!v.is_number_integer()) bad_value(key, "expected an integer");
        return v.get<long long>();
    };
    if (key == "N") {
        c.N = static_cast<int>(integer());
    } else if (key == "y_t") {
        c.y_t = number(v, key);
    } else if (key == "duration") {
        c.duration = number(v, key);
    } else if (key == "dt") {
        c.dt = number(v, key);
    } else if (key == "zeta") {
        c.zeta = number(v, key);
    } else if (key == "omega_n") {
        c.omega_n = number(v, key);
    } else if (key == "A_d") {
        c.A_d = Mat2(matrix_from(v, key, 2, 2));
    } else if (key == "B_d") {
        c.B_d = Vec2(vector_from(v, key, 2));
    } else if (key == "C_d") {
        c.C_d = Row2(vector_from(v, key, 2).transpose());
    } else if (key == "eta") {
        c.eta = number(v, key);
    } else if (key == "Q_noise") {
        c.Q_noise = Mat2(matrix_from(v, key, 2, 2));
    } else if (key == "R") {
        c.R = number(v, key);
    } else if (key == "sensor_variance") {
        if (v.is_null()) {
            c.sensor_variance.reset();
        } else {
            c.sensor_variance = number(v, key);
        }
    } else if (key == "C_m") {
        c.C_m = matrix_from(v, key);
    } else if (key == "Q_care") {
        c.Q_care = Mat2(matrix_from(v, key, 2, 2));
    } else if (key == "P0") {
        c.P0 = Mat2(matrix_from(v, key, 2, 2));
    } else if (key == "s") {
        if (v.is_null()) {
            c.s.reset();
        } else {
            c.s = vector_from(v, key);
        }
    } else if (key == "edges") {
        if (v.is_null()) {
            c.edges.reset();
            return;
        }
        if (!v.is_array()) bad_value(key, "expected an array of [i, j] pairs");
        std::vector<Graph::Edge> edges;
        for (const Json& e : v) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
                bad_value(key, "expected an array of [i, j] pairs");
            }
            edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
        c.edges = std::move(edges);
    } else if (key == "seed") {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            bad_value(key, "expected a non-negative integer");
        }
        c.seed = v.get<std::uint64_t>();
    } else if (key == "steady_window") {
        c.steady_window = window_from(v, key);
    } else if (key == "transient_window") {
        c.transient_window = window_from(v, key);
    } else if (key == "record_stride") {
        c.record_stride = static_cast<int>(integer());
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

std::vector<std::string> column_names(int n) {
    std::vector<std::string> names{"time"};
    for (const char* prefix : {"y_", "y_hat_", "ydot_hat_", "u_"}) {
        for (int i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
    }
    names.insert(names.end(), {"ybar_hat", "zd_y", "zd_ydot"});
    return names;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::string join(const Vector& v) {
    std::string out;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (k) out += ',';
        append_double(out, v(k));
    }
    return out;
}

struct LineCursor {
    std::string_view text;
    std::string source;
    std::size_t pos = 0;
    int line = 0;

    bool next(std::string_view& out) {
        if (pos >= text.size()) return false;
        const std::size_t end = text.find('\n', pos);
        const std::size_t stop = end == std::string_view::npos ? text.size() : end;
        out = text.substr(pos, stop - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line;
        return true;
    }

    [[noreturn]] void fail(int column, const std::string& what) const { throw ParseError(source, line, column, what); }
};

Vector parse_list(const LineCursor& cur, std::string_view text, int column0) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t stop = comma == std::string_view::npos ? text.size() : comma;
        const auto v = parse_double(text.substr(start, stop - start));
        if (!v) cur.fail(column0 + static_cast<int>(start), "expected a number");
        values.push_back(*v);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

ParseError::ParseError(const std::string& source, int line, int column, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

std::string format_double(double v) {
    std::string out;
    append_double(out, v);
    return out;
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

std::string config_to_json(const TrialConfig& cfg) { return config_json(cfg).dump(); }

TrialConfig config_from_json(std::string_view json_text, const TrialConfig& base) {
    Json j;
    try {
        j = Json::parse(json_text.begin(), json_text.end());
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    TrialConfig c = base;
    for (auto it = j.begin(); it != j.end(); ++it) apply_key(c, it.key(), it.value());
    return c;
}

TrialConfig apply_override(const TrialConfig& base, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw std::invalid_argument("override must look like key=value, got '" + std::string(assignment) + "'");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    TrialConfig c = base;
    apply_key(c, key, value);
    return c;
}

TrialConfig load_config_file(const std::filesystem::path& path, const TrialConfig& base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), base);
}

std::string serialize_trial(const TrialRecord& rec) {
    const int n = rec.agents();
    const Certificates& c = rec.certificates;
    std::string out;
    out.reserve(static_cast<std::size_t>(rec.samples()) * static_cast<std::size_t>(4 * n + 4) * 22 + 4096);
    out += kMagic;
    out += "\n# version: " + std::to_string(kTrialFormatVersion);
    out += "\n# trial_index: " + std::to_string(rec.trial_index);
    out += "\n# seed: " + std::to_string(rec.seed);
    out += "\n# samples: " + std::to_string(rec.samples());
    out += "\n# s: " + join(rec.s);
    out += "\n# certificates: " + format_double(c.task_max_increase) + "," + format_double(c.consensus_max_increase) +
           "," + format_double(c.decomposition_error);
    out += "\n# config: " + config_to_json(rec.config);
    out += '\n';
    const auto names = column_names(n);
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (k) out += ',';
        out += names[k];
    }
    out += '\n';
    for (Eigen::Index r = 0; r < rec.samples(); ++r) {
        append_double(out, rec.time(r));
        for (const Matrix* m : {&rec.y, &rec.y_hat, &rec.ydot_hat, &rec.u}) {
            for (int i = 0; i < n; ++i) {
                out += ',';
                append_double(out, (*m)(r, i));
            }
        }
        out += ',';
        append_double(out, rec.ybar_hat(r));
        out += ',';
        append_double(out, rec.z_d(r, 0));
        out += ',';
        append_double(out, rec.z_d(r, 1));
        out += '\n';
    }
    return out;
}

void save_trial(const TrialRecord& rec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trial file " + path.string());
    const std::string text = serialize_trial(rec);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("failed writing trial file " + path.string());
}

TrialRecord parse_trial(std::string_view text, const std::string& source) {
    LineCursor cur{text, source};
    std::string_view line;
    if (!cur.next(line) || line != kMagic) cur.fail(1, "not a synsim trial file (missing '# synsim-trial')");

    std::map<std::string, std::pair<std::string, int>> header;
    std::string_view columns_line;
    bool have_columns = false;
    while (cur.next(line)) {
        if (line.rfind("# ", 0) != 0) {
            columns_line = line;
            have_columns = true;
            break;
        }
        const std::size_t colon = line.find(": ");
        if (colon == std::string_view::npos) cur.fail(3, "header line must look like '# key: value'");
        const std::string key(line.substr(2, colon - 2));
        header[key] = {std::string(line.substr(colon + 2)), cur.line};
        if (key == "version") {
            const std::string& v = header[key].first;
            if (v != std::to_string(kTrialFormatVersion)) {
                throw UnsupportedVersion(source + ": unsupported trial format version '" + v + "' (expected " +
                                         std::to_string(kTrialFormatVersion) + ")");
            }
        }
    }
    for (const char* key : {"version", "trial_index", "seed", "samples", "s", "certificates", "config"}) {
        if (!header.count(key)) cur.fail(1, std::string("missing header field '") + key + "'");
    }
    if (!have_columns) cur.fail(1, "missing column header");

    auto header_int = [&](const char* key) -> long long {
        const auto& [value, line_no] = header[key];
        long long out = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
            throw ParseError(source, line_no, 3 + static_cast<int>(std::string_view(key).size()) + 2,
                             std::string("expected an integer for '") + key + "'");
        }
        return out;
    };

    TrialRecord rec;
    {
        const auto& [value, line_no] = header["config"];
        try {
            rec.config = config_from_json(value);
        } catch (const std::exception& e) {
            throw ParseError(source, line_no, 11, e.what());
        }
    }
    rec.trial_index = static_cast<int>(header_int("trial_index"));
    {
        const auto& [value, line_no] = header["seed"];
        std::uint64_t seed = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
            throw ParseError(source, line_no, 9, "expected an unsigned integer seed");
        }
        rec.seed = seed;
    }
    const long long samples = header_int("samples");
    {
        const auto& [value, line_no] = header["s"];
        LineCursor at{value, source};
        at.line = line_no;
        rec.s = parse_list(at, value, 6);
    }
    {
        const auto& [value, line_no] = header["certificates"];
        LineCursor at{value, source};
        at.line = line_no;
        const Vector c = parse_list(at, value, 17);
        if (c.size() != 3) throw ParseError(source, line_no, 17, "expected three certificate values");
        rec.certificates = {c(0), c(1), c(2)};
    }

    const int n = rec.config.N;
    const auto names = column_names(n);
    {
        std::string expected;
        for (std::size_t k = 0; k < names.size(); ++k) expected += (k ? "," : "") + names[k];
        if (columns_line != expected) cur.fail(1, "unexpected column header for N = " + std::to_string(n));
    }
    if (samples < 1) cur.fail(1, "sample count must be positive");

    const auto rows = static_cast<Eigen::Index>(samples);
    rec.time.resize(rows);
    rec.y.resize(rows, n);
    rec.y_hat.resize(rows, n);
    rec.ydot_hat.resize(rows, n);
    rec.u.resize(rows, n);
    rec.ybar_hat.resize(rows);
    rec.z_d.resize(rows, 2);
    const auto width = static_cast<Eigen::Index>(names.size());

    Eigen::Index r = 0;
    while (cur.next(line)) {
        if (line.empty() && cur.pos >= text.size()) break;
        if (r >= rows) cur.fail(1, "more data rows than the declared sample count");
        Eigen::Index col = 0;
        std::size_t start = 0;
        Vector values(width);
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::size_t stop = comma == std::string_view::npos ? line.size() : comma;
            if (col >= width) cur.fail(static_cast<int>(start) + 1, "too many fields");
            const auto v = parse_double(line.substr(start, stop - start));
            if (!v) cur.fail(static_cast<int>(start) + 1, "expected a number");
            values(col++) = *v;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (col != width) {
            cur.fail(static_cast<int>(line.size()) + 1,
                     "expected " + std::to_string(width) + " fields, found " + std::to_string(col));
        }
        rec.time(r) = values(0);
        rec.y.row(r) = values.segment(1, n).transpose();
        rec.y_hat.row(r) = values.segment(1 + n, n).transpose();
        rec.ydot_hat.row(r) = values.segment(1 + 2 * n, n).transpose();
        rec.u.row(r) = values.segment(1 + 3 * n, n).transpose();
        rec.ybar_hat(r) = values(1 + 4 * n);
        rec.z_d(r, 0) = values(2 + 4 * n);
        rec.z_d(r, 1) = values(3 + 4 * n);
        ++r;
    }
    if (r != rows) {
        cur.fail(1, "file truncated: " + std::to_string(r) + " of " + std::to_string(rows) + " data rows present");
    }
    return rec;
}

TrialRecord load_trial(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read trial file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trial(ss.str(), path.string());
}

}  // namespace synsim
