#pragma once

// MatrixFile: the JSON interchange format for matrices.
//
//   {"dims": [2, 2], "field": "complex", "re": [1, 0, 0, 1], "im": [0, 0.5, -0.5, 0]}
//
// Entries are row-major. "im" is omitted for real matrices. Doubles are
// written in shortest round-trip form, so save followed by load is exact.

#include <string>

#include "json.hpp"

#include "matineq/error.hpp"
#include "matineq/generators.hpp"
#include "matineq/linalg.hpp"

namespace matineq {

/// Malformed matrix document. `where` is a JSON pointer ("/re/3") for schema
/// errors or "byte N" for syntax errors.
class MatrixFormatError : public Error {
 public:
  MatrixFormatError(const std::string& what, std::string where)
      : Error(where.empty() ? what : what + " at " + where), message_(what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::string where_;
};

/// Field::Real when every imaginary part is exactly zero.
Field detect_field(const Matrix& m);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json matrix_to_json(const Matrix& m, Field field);
/// `pointer` prefixes schema error locations when the matrix is nested.
Matrix matrix_from_json(const nlohmann::json& j, const std::string& pointer = "");

std::string format_matrix(const Matrix& m);
Matrix parse_matrix(const std::string& text);

void save_matrix(const std::string& path, const Matrix& m);
/// Throws MatrixFormatError (also for unreadable files, with where = path).
Matrix load_matrix(const std::string& path);

}  // namespace matineq
