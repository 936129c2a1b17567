#pragma once

#include <string>
#include <utility>
#include <vector>

namespace synsim::cli {

/// Six significant digits, "%.6g".
std::string fmt6(double v);

/// The value actually published: fmt6(v) read back.
double round6(double v);

/// Rows of label/value cells rendered both as an aligned text table and as
/// CSV. Every numeric cell is formatted once, so the two never disagree.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells);
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string text() const;
    std::string csv() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace synsim::cli
