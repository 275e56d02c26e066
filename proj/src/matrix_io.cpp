#include "matineq/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace matineq {

namespace {

using nlohmann::json;

std::vector<double> read_parts(const json& j, const char* key, std::size_t count, const std::string& pointer) {
  const std::string where = pointer + "/" + key;
  if (!j.contains(key)) throw MatrixFormatError(std::string("missing field '") + key + "'", pointer.empty() ? "/" : pointer);
  const json& a = j.at(key);
  if (!a.is_array()) throw MatrixFormatError(std::string("field '") + key + "' must be an array", where);
  if (a.size() != count)
    throw MatrixFormatError(std::string("field '") + key + "' has " + std::to_string(a.size()) + " entries, expected " +
                                std::to_string(count),
                            where);
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const json& v = a[k];
    if (!v.is_number()) throw MatrixFormatError("entry is not a number", where + "/" + std::to_string(k));
    out[k] = v.get<double>();
    if (!std::isfinite(out[k])) throw MatrixFormatError("entry is not finite", where + "/" + std::to_string(k));
  }
  return out;
}

}  // namespace

Field detect_field(const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k)
      if (m(i, k).imag() != 0.0) return Field::Complex;
  return Field::Real;
}

json matrix_to_json(const Matrix& m) { return matrix_to_json(m, detect_field(m)); }

json matrix_to_json(const Matrix& m, Field field) {
  std::vector<double> re, im;
  re.reserve(m.size());
  im.reserve(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k) {
      const Complex z = m(i, k);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("matrix_to_json: non-finite entry at (" + std::to_string(i) + ", " + std::to_string(k) + ")");
      if (field == Field::Real && z.imag() != 0.0)
        throw DomainError("matrix_to_json: complex entry in a real matrix");
      re.push_back(z.real());
      im.push_back(z.imag());
    }
  json j;
  j["dims"] = {m.rows(), m.cols()};
  j["field"] = to_string(field);
  j["re"] = re;
  if (field == Field::Complex) j["im"] = im;
  return j;
}

Matrix matrix_from_json(const json& j, const std::string& pointer) {
  const std::string root = pointer.empty() ? "/" : pointer;
  if (!j.is_object()) throw MatrixFormatError("matrix must be a JSON object", root);
  if (!j.contains("dims")) throw MatrixFormatError("missing field 'dims'", root);
  const json& dims = j.at("dims");
  if (!dims.is_array() || dims.size() != 2 || !dims[0].is_number_unsigned() || !dims[1].is_number_unsigned())
    throw MatrixFormatError("'dims' must be [rows, cols] with nonnegative integers", pointer + "/dims");
  const auto rows = dims[0].get<std::size_t>();
  const auto cols = dims[1].get<std::size_t>();

  Field field = Field::Real;
  if (j.contains("field")) {
    if (!j.at("field").is_string()) throw MatrixFormatError("'field' must be a string", pointer + "/field");
    const auto name = j.at("field").get<std::string>();
    if (name == "real")
      field = Field::Real;
    else if (name == "complex")
      field = Field::Complex;
    else
      throw MatrixFormatError("unknown field '" + name + "'", pointer + "/field");
  }

  const std::vector<double> re = read_parts(j, "re", rows * cols, pointer);
  std::vector<double> im(rows * cols, 0.0);
  if (field == Field::Complex)
    im = read_parts(j, "im", rows * cols, pointer);
  else if (j.contains("im"))
    throw MatrixFormatError("real matrix must not carry 'im'", pointer + "/im");

  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Index>(i), static_cast<Index>(k)) = Complex(re[i * cols + k], im[i * cols + k]);
  return m;
}

std::string format_matrix(const Matrix& m) { return matrix_to_json(m).dump(); }

Matrix parse_matrix(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MatrixFormatError("invalid JSON", "byte " + std::to_string(e.byte));
  }
  return matrix_from_json(j);
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("save_matrix: cannot open " + path);
  out << format_matrix(m) << '\n';
  if (!out) throw Error("save_matrix: write failed for " + path);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixFormatError("cannot read file", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_matrix(buf.str());
  } catch (const MatrixFormatError& e) {
    throw MatrixFormatError(path + ": " + e.message(), e.where());
  }
}

}  // namespace matineq
