// Compressed-sparse-row matrices with deterministic triplet assembly, a
// Jacobi-preconditioned conjugate gradient solver (optionally restricted to a
// free-DOF subset for active-set methods), and a dense Cholesky fallback.
#ifndef BIOGDS_SPARSE_HPP
#define BIOGDS_SPARSE_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace biogds {

struct Triplet {
  int row;
  int col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Duplicate triplets are summed. The reduction order depends only on the
  // triplet list order, never on thread count.
  static SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& triplets);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return vals_.size(); }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  std::vector<double> multiply(const std::vector<double>& x) const;

  double value_at(int row, int col) const;  // 0 when the entry is not stored
  std::vector<double> diagonal() const;
  double quad_form(const std::vector<double>& x) const;  // x^T A x
  double max_asymmetry() const;                          // max |A_ij - A_ji|
  double max_abs() const;

  // Block extraction by index sets (e.g. interior x boundary coupling).
  SparseMatrix block(const std::vector<int>& row_ids, const std::vector<int>& col_ids) const;

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return vals_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> vals_;
};

struct CgOptions {
  double tol = 1e-12;       // relative residual target
  int max_iter = 0;         // 0 -> 10 * n + 200
  bool jacobi = true;
  bool direct_fallback = false;  // dense Cholesky when CG stagnates
};

struct CgResult {
  bool converged = false;
  int iterations = 0;
  double rel_residual = 0.0;
  bool used_fallback = false;
};

// Solves A x = b for SPD A. When `fixed` is non-null, entries with fixed[i] != 0
// keep their initial x value and their equations are dropped (projected CG on
// the free subset). x must be sized and hold the fixed values on entry.
CgResult cg_solve(const SparseMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                  const CgOptions& opts = {}, const std::vector<char>* fixed = nullptr);

// Dense Cholesky (LL^T) for small systems and test oracles. Throws on
// non-positive pivots.
class DenseCholesky {
 public:
  explicit DenseCholesky(const std::vector<double>& a, int n);  // row-major n x n
  std::vector<double> solve(const std::vector<double>& b) const;

 private:
  int n_;
  std::vector<double> l_;
};

std::vector<double> dense_solve_spd(const SparseMatrix& A, const std::vector<double>& b);

}  // namespace biogds

#endif
