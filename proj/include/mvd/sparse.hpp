#pragma once

// Row-compressed sparse matrices for the assembled bilinear forms.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mvd {

struct Triplet {
  int row;
  int col;
  double value;
};

class SparseOperator {
 public:
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> row_ptr;  // size n_rows + 1
  std::vector<int> col;
  std::vector<double> val;
  bool symmetric = false;

  static SparseOperator from_triplets(int rows, int cols,
                                      std::vector<Triplet> t,
                                      bool symmetric_flag = false) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseOperator m;
    m.n_rows = rows;
    m.n_cols = cols;
    m.symmetric = symmetric_flag;
    m.row_ptr.assign(rows + 1, 0);
    for (std::size_t i = 0; i < t.size();) {
      std::size_t j = i;
      double acc = 0.0;
      while (j < t.size() && t[j].row == t[i].row && t[j].col == t[i].col)
        acc += t[j++].value;
      m.col.push_back(t[i].col);
      m.val.push_back(acc);
      ++m.row_ptr[t[i].row + 1];
      i = j;
    }
    for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
  }

  int nnz() const { return static_cast<int>(val.size()); }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n_rows, 0.0);
    for (int r = 0; r < n_rows; ++r) {
      double acc = 0.0;
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        acc += val[k] * x[col[k]];
      y[r] = acc;
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y;
    apply(x, y);
    return y;
  }

  double entry(int r, int c) const {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (col[k] == c) return val[k];
    return 0.0;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : val) m = std::max(m, std::abs(v));
    return m;
  }

  /// max |B - B^T| over all entries.
  double max_asymmetry() const {
    if (n_rows != n_cols)
      throw std::invalid_argument("max_asymmetry: matrix not square");
    double m = 0.0;
    for (int r = 0; r < n_rows; ++r)
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        m = std::max(m, std::abs(val[k] - entry(col[k], r)));
    return m;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_rows, 0.0);
    for (int r = 0; r < n_rows && r < n_cols; ++r) d[r] = entry(r, r);
    return d;
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2_vec(const std::vector<double>& a) {
  return std::sqrt(dot(a, a));
}

}  // namespace mvd
