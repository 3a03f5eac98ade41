#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "morh2w/error.hpp"
#include "morh2w/harness.hpp"

namespace morh2w {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Matrix json_matrix(const json& j, const std::string& name, const std::string& file) {
  if (!j.is_array()) fail(ErrorCode::ParseError, file + ": \"" + name + "\" must be an array of rows");
  if (j.empty()) return Matrix(0, 0);
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) fail(ErrorCode::ParseError, file + ": \"" + name + "\" row " + std::to_string(i) + " is not an array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) fail(ErrorCode::DimensionMismatch, file + ": \"" + name + "\" has ragged rows");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      const json& v = j[i][k];
      if (!v.is_number()) {
        fail(ErrorCode::ParseError, file + ": \"" + name + "\"[" + std::to_string(i) + "][" + std::to_string(k) +
                                        "] is not a number");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v.get<double>();
    }
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

// An empty JSON array carries no shape; fill in what the other blocks imply.
StateSpace assemble(Matrix a, Matrix b, Matrix c, Matrix d, bool has_d) {
  const Eigen::Index n = a.rows();
  if (n == 0) {
    if (!has_d) fail(ErrorCode::DimensionMismatch, "a 0-state model needs D to fix its I/O size");
    a.resize(0, 0);
    b.resize(0, d.cols());
    c.resize(d.rows(), 0);
  }
  if (!has_d) d = Matrix::Zero(c.rows(), b.cols());
  return {std::move(a), std::move(b), std::move(c), std::move(d)};
}

StateSpace load_json(const fs::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
  if (!doc.is_object()) fail(ErrorCode::ParseError, path.string() + ": top level must be an object");
  for (const char* key : {"A", "B", "C"}) {
    if (!doc.contains(key)) fail(ErrorCode::ParseError, path.string() + ": missing \"" + key + "\"");
  }
  const std::string f = path.string();
  const bool has_d = doc.contains("D");
  return assemble(json_matrix(doc["A"], "A", f), json_matrix(doc["B"], "B", f), json_matrix(doc["C"], "C", f),
                  has_d ? json_matrix(doc["D"], "D", f) : Matrix(), has_d);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Matrix parse_matrix_market(std::istream& in, const std::string& name) {
  std::string line;
  int lineno = 0;
  auto where = [&](std::size_t col) { return name + ":" + std::to_string(lineno) + ":" + std::to_string(col) + ": "; };
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, name + ": empty file");
  ++lineno;
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") fail(ErrorCode::ParseError, where(1) + "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") fail(ErrorCode::ParseError, where(1) + "object must be 'matrix'");
  if (format != "coordinate" && format != "array") fail(ErrorCode::ParseError, where(1) + "unknown format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double") {
    fail(ErrorCode::ParseError, where(1) + "field '" + field + "' not supported");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    fail(ErrorCode::ParseError, where(1) + "symmetry '" + symmetry + "' not supported");
  }
  const bool sym = symmetry == "symmetric";

  // Remaining tokens with their source positions.
  struct Token {
    std::string text;
    int line;
    std::size_t col;
  };
  std::vector<Token> tokens;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    std::size_t pos = 0;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t\r", pos);
      if (pos == std::string::npos) break;
      const std::size_t end = line.find_first_of(" \t\r", pos);
      tokens.push_back({line.substr(pos, end == std::string::npos ? std::string::npos : end - pos), lineno, pos + 1});
      pos = end == std::string::npos ? line.size() : end;
    }
  }
  std::size_t next = 0;
  auto number = [&](bool integer) -> double {
    if (next >= tokens.size()) fail(ErrorCode::ParseError, name + ": unexpected end of file");
    const Token& t = tokens[next++];
    try {
      std::size_t used = 0;
      const double v = integer ? static_cast<double>(std::stoll(t.text, &used)) : std::stod(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument(t.text);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, name + ":" + std::to_string(t.line) + ":" + std::to_string(t.col) + ": bad number '" +
                                      t.text + "'");
    }
  };
  const auto rows = static_cast<Eigen::Index>(number(true));
  const auto cols = static_cast<Eigen::Index>(number(true));
  if (rows < 0 || cols < 0) fail(ErrorCode::ParseError, name + ": negative dimensions");
  if (sym && rows != cols) fail(ErrorCode::ParseError, name + ": symmetric matrix must be square");
  Matrix m = Matrix::Zero(rows, cols);
  const bool integer_field = field == "integer";
  if (format == "coordinate") {
    const auto nnz = static_cast<long long>(number(true));
    for (long long k = 0; k < nnz; ++k) {
      const Token& at = next < tokens.size() ? tokens[next] : tokens.back();
      const auto i = static_cast<Eigen::Index>(number(true)) - 1;
      const auto j = static_cast<Eigen::Index>(number(true)) - 1;
      const double v = number(integer_field);
      if (i < 0 || i >= rows || j < 0 || j >= cols) {
        fail(ErrorCode::ParseError, name + ":" + std::to_string(at.line) + ":" + std::to_string(at.col) + ": index out of range");
      }
      m(i, j) += v;
      if (sym && i != j) m(j, i) += v;
    }
  } else {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = sym ? j : 0; i < rows; ++i) {
        m(i, j) = number(integer_field);
        if (sym) m(j, i) = m(i, j);
      }
    }
  }
  if (next != tokens.size()) {
    const Token& t = tokens[next];
    fail(ErrorCode::ParseError, name + ":" + std::to_string(t.line) + ":" + std::to_string(t.col) + ": trailing data");
  }
  return m;
}

Matrix read_matrix_market(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return parse_matrix_market(in, path.string());
}

void write_matrix_market(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
  out.precision(17);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out << m(i, j) << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

StateSpace load_statespace(const fs::path& path, std::vector<std::string>* warnings) {
  std::error_code ec;
  StateSpace sys;
  if (fs::is_directory(path, ec)) {
    const Matrix a = read_matrix_market(path / "A.mtx");
    const Matrix b = read_matrix_market(path / "B.mtx");
    const Matrix c = read_matrix_market(path / "C.mtx");
    const bool has_d = fs::exists(path / "D.mtx");
    sys = assemble(a, b, c, has_d ? read_matrix_market(path / "D.mtx") : Matrix(), has_d);
  } else {
    sys = load_json(path);
  }
  if (warnings && !sys.is_stable()) warnings->push_back(path.string() + ": model is not stable");
  return sys;
}

std::string statespace_to_json(const StateSpace& sys) {
  json doc;
  doc["A"] = matrix_json(sys.A());
  doc["B"] = matrix_json(sys.B());
  doc["C"] = matrix_json(sys.C());
  doc["D"] = matrix_json(sys.D());
  return doc.dump(2) + "\n";
}

void save_statespace(const fs::path& path, const StateSpace& sys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << statespace_to_json(sys);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

void save_statespace_mtx(const fs::path& dir, const StateSpace& sys) {
  fs::create_directories(dir);
  write_matrix_market(dir / "A.mtx", sys.A());
  write_matrix_market(dir / "B.mtx", sys.B());
  write_matrix_market(dir / "C.mtx", sys.C());
  write_matrix_market(dir / "D.mtx", sys.D());
}

}  // namespace morh2w
