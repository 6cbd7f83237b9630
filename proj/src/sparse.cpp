#include "biogds/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace biogds {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         const std::vector<Triplet>& triplets) {
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;

  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stable sort keeps duplicate entries in triplet order, so the summation
  // order is reproducible.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Triplet& ta = triplets[a];
    const Triplet& tb = triplets[b];
    return ta.row != tb.row ? ta.row < tb.row : ta.col < tb.col;
  });

  m.row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  int prev_row = -1, prev_col = -1;
  for (std::size_t k : order) {
    const Triplet& t = triplets[k];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::out_of_range("SparseMatrix::from_triplets: index out of range");
    if (t.row == prev_row && t.col == prev_col) {
      m.vals_.back() += t.value;
    } else {
      m.col_idx_.push_back(t.col);
      m.vals_.push_back(t.value);
      ++m.row_ptr_[static_cast<std::size_t>(t.row) + 1];
      prev_row = t.row;
      prev_col = t.col;
    }
  }
  for (int r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(static_cast<std::size_t>(rows_), 0.0);
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += vals_[k] * x[col_idx_[k]];
    y[r] = s;
  }
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
  std::vector<double> y;
  multiply(x, y);
  return y;
}

double SparseMatrix::value_at(int row, int col) const {
  for (int k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k)
    if (col_idx_[k] == col) return vals_[k];
  return 0.0;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
  for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = value_at(r, r);
  return d;
}

double SparseMatrix::quad_form(const std::vector<double>& x) const {
  double s = 0.0;
  for (int r = 0; r < rows_; ++r) {
    double row = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) row += vals_[k] * x[col_idx_[k]];
    s += x[r] * row;
  }
  return s;
}

double SparseMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      worst = std::max(worst, std::abs(vals_[k] - value_at(col_idx_[k], r)));
  return worst;
}

double SparseMatrix::max_abs() const {
  double worst = 0.0;
  for (double v : vals_) worst = std::max(worst, std::abs(v));
  return worst;
}

SparseMatrix SparseMatrix::block(const std::vector<int>& row_ids,
                                 const std::vector<int>& col_ids) const {
  std::vector<int> col_map(static_cast<std::size_t>(cols_), -1);
  for (int j = 0; j < static_cast<int>(col_ids.size()); ++j) col_map[col_ids[j]] = j;
  std::vector<Triplet> t;
  for (int i = 0; i < static_cast<int>(row_ids.size()); ++i) {
    const int r = row_ids[i];
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int j = col_map[col_idx_[k]];
      if (j >= 0) t.push_back({i, j, vals_[k]});
    }
  }
  return from_triplets(static_cast<int>(row_ids.size()), static_cast<int>(col_ids.size()), t);
}

namespace {

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CgResult cg_solve(const SparseMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                  const CgOptions& opts, const std::vector<char>* fixed) {
  const int n = A.rows();
  CgResult res;
  if (x.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("cg_solve: x must be sized (it carries fixed values)");

  auto mask = [&](std::vector<double>& v) {
    if (!fixed) return;
    for (int i = 0; i < n; ++i)
      if ((*fixed)[i]) v[i] = 0.0;
  };

  std::vector<double> prec(static_cast<std::size_t>(n), 1.0);
  if (opts.jacobi) {
    const std::vector<double> d = A.diagonal();
    for (int i = 0; i < n; ++i) prec[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  }

  std::vector<double> r(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n)),
      p(static_cast<std::size_t>(n)), q(static_cast<std::size_t>(n));
  A.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  mask(r);

  double bnorm = 0.0;
  {
    std::vector<double> bm = b;
    mask(bm);
    bnorm = std::sqrt(dot_vec(bm, bm));
  }
  if (bnorm == 0.0) bnorm = 1.0;

  double rnorm = std::sqrt(dot_vec(r, r));
  if (rnorm / bnorm <= opts.tol) {
    res.converged = true;
    res.rel_residual = rnorm / bnorm;
    return res;
  }

  for (int i = 0; i < n; ++i) z[i] = prec[i] * r[i];
  mask(z);
  p = z;
  double rz = dot_vec(r, z);

  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n + 200;
  int it = 0;
  for (; it < max_iter; ++it) {
    A.multiply(p, q);
    mask(q);
    const double pq = dot_vec(p, q);
    if (pq <= 0.0) break;  // lost positive definiteness on the free set
    const double alpha = rz / pq;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];
    rnorm = std::sqrt(dot_vec(r, r));
    if (rnorm / bnorm <= opts.tol) {
      res.converged = true;
      break;
    }
    for (int i = 0; i < n; ++i) z[i] = prec[i] * r[i];
    mask(z);
    const double rz_new = dot_vec(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  res.iterations = it + 1;
  res.rel_residual = rnorm / bnorm;

  if (!res.converged && opts.direct_fallback && !fixed) {
    x = dense_solve_spd(A, b);
    std::vector<double> rr = A.multiply(x);
    for (int i = 0; i < n; ++i) rr[i] = b[i] - rr[i];
    res.rel_residual = std::sqrt(dot_vec(rr, rr)) / bnorm;
    res.converged = res.rel_residual <= opts.tol * 100.0;
    res.used_fallback = true;
  }
  return res;
}

DenseCholesky::DenseCholesky(const std::vector<double>& a, int n) : n_(n), l_(a) {
  for (int j = 0; j < n_; ++j) {
    double d = l_[j * n_ + j];
    for (int k = 0; k < j; ++k) d -= l_[j * n_ + k] * l_[j * n_ + k];
    if (d <= 0.0) throw std::runtime_error("DenseCholesky: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l_[j * n_ + j] = ljj;
    for (int i = j + 1; i < n_; ++i) {
      double s = l_[i * n_ + j];
      for (int k = 0; k < j; ++k) s -= l_[i * n_ + k] * l_[j * n_ + k];
      l_[i * n_ + j] = s / ljj;
    }
  }
}

std::vector<double> DenseCholesky::solve(const std::vector<double>& b) const {
  std::vector<double> y(b);
  for (int i = 0; i < n_; ++i) {
    double s = y[i];
    for (int k = 0; k < i; ++k) s -= l_[i * n_ + k] * y[k];
    y[i] = s / l_[i * n_ + i];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n_; ++k) s -= l_[k * n_ + i] * y[k];
    y[i] = s / l_[i * n_ + i];
  }
  return y;
}

std::vector<double> dense_solve_spd(const SparseMatrix& A, const std::vector<double>& b) {
  const int n = A.rows();
  std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r)
    for (int k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k)
      dense[static_cast<std::size_t>(r) * n + A.col_idx()[k]] = A.values()[k];
  return DenseCholesky(dense, n).solve(b);
}

}  // namespace biogds
