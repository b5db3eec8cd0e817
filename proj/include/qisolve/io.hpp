#pragma once

#include <qisolve/sampled_matrix.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace qisolve::io {

// Vector text format:  "VEC n" then n lines "re im".
// Matrix text format:  "MAT m n nnz" then nnz lines "i j re im" (0-based).
// Numbers are written in shortest round-trip form, so write then read is exact.

struct MatrixFile {
  Index rows = 0;
  Index cols = 0;
  std::vector<MatrixEntry<Complex>> entries;

  CMatrix dense() const;
  ComplexSampledMatrix sampled(bool with_transpose = false) const;
};

std::string format_double(double v);

void write_vector(std::ostream& os, const CVector& v);
void write_matrix(std::ostream& os, const CMatrix& a);  // zero entries are skipped
CVector read_vector(std::istream& is);
MatrixFile read_matrix(std::istream& is);

void save_vector(const std::string& path, const CVector& v);
void save_matrix(const std::string& path, const CMatrix& a);
CVector load_vector(const std::string& path);
MatrixFile load_matrix(const std::string& path);

}  // namespace qisolve::io
