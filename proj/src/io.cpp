#include <qisolve/io.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qisolve::io {

namespace {

template <typename T>
T parse_number(const std::string& tok, std::size_t line) {
  T value{};
  const char* first = tok.data();
  const char* last = first + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
  return value;
}

std::vector<std::string> fields(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

// Next non-blank line split into fields; empty when the stream is exhausted.
std::vector<std::string> next_record(std::istream& is, std::size_t& line_no) {
  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    auto f = fields(line);
    if (!f.empty()) return f;
  }
  return {};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_vector(std::ostream& os, const CVector& v) {
  os << "VEC " << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << format_double(v(i).real()) << ' ' << format_double(v(i).imag()) << '\n';
  }
}

void write_matrix(std::ostream& os, const CMatrix& a) {
  Index nnz = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) nnz += a(i, j) != Complex(0.0) ? 1 : 0;
  os << "MAT " << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) == Complex(0.0)) continue;
      os << i << ' ' << j << ' ' << format_double(a(i, j).real()) << ' ' << format_double(a(i, j).imag())
         << '\n';
    }
  }
}

CVector read_vector(std::istream& is) {
  std::size_t line = 0;
  auto head = next_record(is, line);
  if (head.size() != 2 || head[0] != "VEC") throw Error(ErrorKind::Parse, "expected 'VEC n' header");
  const auto n = parse_number<Index>(head[1], line);
  if (n == 0) throw Error(ErrorKind::EmptyVector, "vector file declares length 0");
  CVector v(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    auto f = next_record(is, line);
    if (f.empty()) throw Error(ErrorKind::Parse, "vector file ends after " + std::to_string(i) + " entries");
    if (f.size() != 2) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": expected 're im'");
    v(static_cast<Eigen::Index>(i)) = Complex(parse_number<double>(f[0], line), parse_number<double>(f[1], line));
  }
  if (!next_record(is, line).empty()) throw Error(ErrorKind::Parse, "trailing data after vector entries");
  return v;
}

MatrixFile read_matrix(std::istream& is) {
  std::size_t line = 0;
  auto head = next_record(is, line);
  if (head.size() != 4 || head[0] != "MAT") throw Error(ErrorKind::Parse, "expected 'MAT m n nnz' header");
  MatrixFile out;
  out.rows = parse_number<Index>(head[1], line);
  out.cols = parse_number<Index>(head[2], line);
  const auto nnz = parse_number<Index>(head[3], line);
  if (out.rows == 0 || out.cols == 0) throw Error(ErrorKind::EmptyVector, "matrix file declares an empty shape");
  out.entries.reserve(nnz);
  for (Index e = 0; e < nnz; ++e) {
    auto f = next_record(is, line);
    if (f.empty()) throw Error(ErrorKind::Parse, "matrix file ends after " + std::to_string(e) + " entries");
    if (f.size() != 4) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": expected 'i j re im'");
    MatrixEntry<Complex> entry{parse_number<Index>(f[0], line), parse_number<Index>(f[1], line),
                               Complex(parse_number<double>(f[2], line), parse_number<double>(f[3], line))};
    detail::check_index(entry.row, out.rows, "row");
    detail::check_index(entry.col, out.cols, "column");
    out.entries.push_back(entry);
  }
  if (!next_record(is, line).empty()) throw Error(ErrorKind::Parse, "trailing data after matrix entries");
  return out;
}

CMatrix MatrixFile::dense() const {
  CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (const auto& e : entries) a(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
  return a;
}

ComplexSampledMatrix MatrixFile::sampled(bool with_transpose) const {
  return ComplexSampledMatrix(rows, cols, entries, with_transpose);
}

void save_vector(const std::string& path, const CVector& v) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  write_vector(os, v);
  if (!os) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

void save_matrix(const std::string& path, const CMatrix& a) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  write_matrix(os, a);
  if (!os) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

CVector load_vector(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return read_vector(is);
}

MatrixFile load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return read_matrix(is);
}

}  // namespace qisolve::io
