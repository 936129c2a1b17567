#include "synsim_cli/report_format.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace synsim::cli {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double round6(double v) { return std::stod(fmt6(v)); }

void Table::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::invalid_argument("table row has the wrong number of cells");
    rows_.push_back(std::move(cells));
}

std::string Table::text() const {
    std::vector<std::size_t> width(header_.size());
    for (std::size_t c = 0; c < header_.size(); ++c) {
        width[c] = header_[c].size();
        for (const auto& r : rows_) width[c] = std::max(width[c], r[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += "  ";
            out += cells[c];
            if (c + 1 < cells.size()) out.append(width[c] - cells[c].size(), ' ');
        }
        return out + "\n";
    };
    std::string out = line(header_);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (const auto& r : rows_) out += line(r);
    return out;
}

std::string Table::csv() const {
    auto line = [](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += ',';
            out += cells[c];
        }
        return out + "\n";
    };
    std::string out = line(header_);
    for (const auto& r : rows_) out += line(r);
    return out;
}

}  // namespace synsim::cli
