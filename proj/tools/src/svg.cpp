#include "synsim_cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace synsim::cli {

namespace {

constexpr std::size_t kMaxPoints = 1500;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) {
            const double pad = std::max(1.0, std::abs(lo)) * 0.05;
            lo -= pad;
            hi += pad;
        }
    }
};

double nice_step(double span, int target_ticks) {
    const double raw = span / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    const double nice = f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0;
    return nice * mag;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v, double step) {
    char buf[32];
    const int decimals = std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9)));
    std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-6 ? 0.0 : v);
    return buf;
}

}  // namespace

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string palette(std::size_t k) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[k % (sizeof colors / sizeof colors[0])];
}

std::string render_svg(const Plot& plot, int width, int height) {
    const double left = 70, right = 170, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;

    Range xr, yr;
    for (const Series& s : plot.series) {
        for (Eigen::Index i = 0; i < s.x.size(); ++i) xr.add(s.x(i));
        for (Eigen::Index i = 0; i < s.y.size(); ++i) yr.add(s.y(i));
    }
    if (plot.hline) yr.add(*plot.hline);
    xr.settle();
    yr.settle();
    const double ypad = 0.05 * (yr.hi - yr.lo);
    yr.lo -= ypad;
    yr.hi += ypad;

    auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
       << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(plot.title) << "</text>\n";

    // axes and ticks
    os << "<g stroke=\"#444\" stroke-width=\"1\">\n"
       << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
       << num(top + ph) << "\"/>\n"
       << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
       << num(top + ph) << "\"/>\n</g>\n";
    os << "<g fill=\"#222\">\n";
    const double xs = nice_step(xr.hi - xr.lo, 8);
    for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + 1e-9 * xs; v += xs) {
        os << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(v)) << "\" y2=\""
           << num(top + ph + 5) << "\" stroke=\"#444\"/>"
           << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(v, xs) << "</text>\n";
    }
    const double ys = nice_step(yr.hi - yr.lo, 6);
    for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi + 1e-9 * ys; v += ys) {
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(left) << "\" y2=\""
           << num(sy(v)) << "\" stroke=\"#444\"/>"
           << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(v) + 4) << "\" text-anchor=\"end\">"
           << tick_label(v, ys) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12.0) << "\" text-anchor=\"middle\">"
       << xml_escape(plot.x_label) << "</text>\n"
       << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << num(top + ph / 2) << ")\">" << xml_escape(plot.y_label) << "</text>\n</g>\n";

    if (plot.hline) {
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(*plot.hline)) << "\" x2=\"" << num(left + pw)
           << "\" y2=\"" << num(sy(*plot.hline)) << "\" stroke=\"#000\" stroke-dasharray=\"2,3\"/>\n";
    }

    for (const Series& s : plot.series) {
        const Eigen::Index n = std::min(s.x.size(), s.y.size());
        const Eigen::Index stride = std::max<Eigen::Index>(1, n / static_cast<Eigen::Index>(kMaxPoints));
        if (s.markers_only) {
            os << "<g fill=\"" << s.color << "\">\n";
            for (Eigen::Index i = 0; i < n; i += stride) {
                if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) continue;
                os << "<circle cx=\"" << num(sx(s.x(i))) << "\" cy=\"" << num(sy(s.y(i))) << "\" r=\"2.5\"/>\n";
            }
            os << "</g>\n";
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) os << " stroke-dasharray=\"6,4\"";
        os << " points=\"";
        bool first = true;
        for (Eigen::Index i = 0; i < n; i += stride) {
            if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) continue;
            if (!first) os << ' ';
            os << num(sx(s.x(i))) << ',' << num(sy(s.y(i)));
            first = false;
        }
        os << "\"/>\n";
    }

    // legend
    double ly = top + 10;
    const double lx = left + pw + 15;
    for (const Series& s : plot.series) {
        if (s.markers_only) {
            os << "<circle cx=\"" << num(lx + 10) << "\" cy=\"" << num(ly) << "\" r=\"3\" fill=\"" << s.color
               << "\"/>";
        } else {
            os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20) << "\" y2=\""
               << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
               << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>";
        }
        os << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(s.label) << "</text>\n";
        ly += 18;
    }
    if (plot.hline) {
        os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20) << "\" y2=\""
           << num(ly) << "\" stroke=\"#000\" stroke-dasharray=\"2,3\"/>"
           << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(plot.hline_label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace synsim::cli
