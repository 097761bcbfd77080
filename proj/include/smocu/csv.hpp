#pragma once

// Minimal CSV emission: comma separated, header row, '.' decimal point and
// shortest round-trip formatting for doubles.

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace smocu::csv {

inline std::string format(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("csv: failed to format double");
    return std::string(buf, res.ptr);
}

inline std::string format(long long v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::size_t v) { return std::to_string(v); }
inline std::string format(bool v) { return v ? "1" : "0"; }
inline std::string format(std::string_view v) { return std::string(v); }
inline std::string format(const char* v) { return std::string(v); }

/// Appends comma-separated fields to a line buffer.
class Row {
   public:
    template <typename T>
    Row& operator<<(const T& v) {
        if (!line_.empty()) line_ += ',';
        line_ += format(v);
        return *this;
    }
    const std::string& str() const { return line_; }

   private:
    std::string line_;
};

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

/// Matrix with a header row "theta,1,...,n_psi" and the 1-based theta index
/// leading each row.
inline std::vector<std::string> matrix_lines(const Eigen::MatrixXd& m) {
    std::vector<std::string> lines;
    Row header;
    header << "theta";
    for (Eigen::Index c = 0; c < m.cols(); ++c) header << static_cast<int>(c + 1);
    lines.push_back(header.str());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Row row;
        row << static_cast<int>(r + 1);
        for (Eigen::Index c = 0; c < m.cols(); ++c) row << m(r, c);
        lines.push_back(row.str());
    }
    return lines;
}

}  // namespace smocu::csv
