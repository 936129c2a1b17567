#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "synsim/analysis.hpp"
#include "synsim/trial_io.hpp"

namespace synsim {

Vector butterworth_lowpass(const Vector& series, double cutoff_hz, double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0)) {
        throw std::invalid_argument("cutoff and sample rate must be positive");
    }
    if (cutoff_hz >= 0.5 * sample_rate_hz) {
        throw std::invalid_argument("cutoff must be below the Nyquist frequency");
    }
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
    const double q = std::numbers::sqrt2;
    const double norm = 1.0 / (1.0 + q * k + k * k);
    const double b0 = k * k * norm;
    const double b1 = 2.0 * b0;
    const double b2 = b0;
    const double a1 = 2.0 * (k * k - 1.0) * norm;
    const double a2 = (1.0 - q * k + k * k) * norm;

    Vector out(series.size());
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < series.size(); ++i) {
        const double x = series(i);
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        out(i) = y;
    }
    return out;
}

OutlierReport outlier_filter(const std::vector<ForceTrial>& trials, const TimeWindow& window) {
    OutlierReport report;
    for (const ForceTrial& t : trials) {
        const Matrix w = window_rows(t.time, t.forces, window);
        if (w.rows() == 0) {
            report.removed.push_back(t.name);
            report.reasons.push_back("no samples in the analysis window");
            continue;
        }
        const Vector means = w.colwise().mean().transpose();
        const double avg = means.mean();
        std::string reason;
        for (Eigen::Index i = 0; i < means.size(); ++i) {
            if (means(i) < 1.0) {
                reason = "finger " + std::to_string(i + 1) + " mean force below 1 N";
                break;
            }
            if (means(i) < 0.2 * avg) {
                reason = "finger " + std::to_string(i + 1) + " below 20% of the average finger force";
                break;
            }
        }
        if (reason.empty()) {
            report.kept.push_back(t);
        } else {
            report.removed.push_back(t.name);
            report.reasons.push_back(reason);
        }
    }
    return report;
}

ForceTrial load_force_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read force file " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<double> values;
        std::size_t start = 0;
        bool numeric = true;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::size_t stop = comma == std::string::npos ? line.size() : comma;
            std::string_view field(line.data() + start, stop - start);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            const auto v = parse_double(field);
            if (!v) {
                if (rows.empty() && width == 0) {
                    numeric = false;
                    break;
                }
                throw ParseError(path, line_no, static_cast<int>(start) + 1, "expected a number");
            }
            values.push_back(*v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!numeric) {
            // column header
            width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
            continue;
        }
        if (width == 0) width = values.size();
        if (values.size() != width) {
            throw ParseError(path, line_no, static_cast<int>(line.size()) + 1,
                             "expected " + std::to_string(width) + " fields, found " + std::to_string(values.size()));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw ParseError(path, std::max(line_no, 1), 1, "no data rows");
    if (width < 2) throw ParseError(path, 1, 1, "need a time column and at least one force column");

    ForceTrial t;
    t.name = std::filesystem::path(path).stem().string();
    t.time.resize(static_cast<Eigen::Index>(rows.size()));
    t.forces.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        t.time(ri) = rows[r][0];
        for (std::size_t c = 1; c < width; ++c) t.forces(ri, static_cast<Eigen::Index>(c - 1)) = rows[r][c];
    }
    return t;
}

double infer_sample_rate(const Vector& time) {
    if (time.size() < 2) throw std::invalid_argument("need at least two samples to infer a sample rate");
    std::vector<double> gaps;
    gaps.reserve(static_cast<std::size_t>(time.size() - 1));
    for (Eigen::Index i = 1; i < time.size(); ++i) gaps.push_back(time(i) - time(i - 1));
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    if (!(*mid > 0.0)) throw std::invalid_argument("time stamps must be increasing");
    return 1.0 / *mid;
}

}  // namespace synsim
