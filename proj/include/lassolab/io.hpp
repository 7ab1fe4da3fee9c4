#pragma once

#include "lassolab/model.hpp"

#include <string>

namespace lassolab {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major CSV, one matrix row per line. Blank lines are skipped; ragged
/// rows and unparsable fields raise IoError.
Matrix read_matrix_csv(const std::string& path);
/// One real per line.
Vector read_vector(const std::string& path);

/// Values are written with %.17g so they read back bit-identically.
void write_matrix_csv(const std::string& path, const Matrix& M);
void write_vector(const std::string& path, const Vector& v);

std::string format_double(double x);

}  // namespace lassolab
