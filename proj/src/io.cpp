#include "lassolab/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace lassolab {

namespace {

double parse_double(const std::string& field, const std::string& path, size_t line) {
    size_t b = field.find_first_not_of(" \t\r");
    size_t e = field.find_last_not_of(" \t\r");
    if (b == std::string::npos) throw IoError(path + ":" + std::to_string(line) + ": empty field");
    const std::string s = field.substr(b, e - b + 1);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw IoError(path + ":" + std::to_string(line) + ": cannot parse '" + s + "'");
    return v;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(parse_double(field, path, lineno));
        if (!line.empty() && line.back() == ',') throw IoError(path + ":" + std::to_string(lineno) + ": trailing comma");
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no data");
    Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return M;
}

Vector read_vector(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<double> vals;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        vals.push_back(parse_double(line, path, lineno));
    }
    if (vals.empty()) throw IoError(path + ": no data");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_vector(const std::string& path, const Vector& v) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v(i)) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace lassolab
