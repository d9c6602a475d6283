#include "combforge/kernels.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace combforge {

namespace {

/// Rows touching one block, stacked as vectorized (column-major) functionals.
struct BlockRows {
  std::vector<Eigen::Index> row_ids;
  Eigen::SparseMatrix<double, Eigen::RowMajor> stacked;
};

std::vector<BlockRows> index_rows(const ConstraintRows& rows, const std::vector<Eigen::MatrixXd>& w) {
  std::vector<BlockRows> out(w.size());
  std::vector<std::vector<Eigen::Triplet<double>>> entries(w.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i]) {
      const auto b = static_cast<std::size_t>(e.block);
      const auto local = static_cast<Eigen::Index>(out[b].row_ids.size());
      out[b].row_ids.push_back(static_cast<Eigen::Index>(i));
      const Eigen::Index n = e.matrix.rows();
      for (Eigen::Index k = 0; k < e.matrix.outerSize(); ++k)
        for (SparseBlock::InnerIterator it(e.matrix, k); it; ++it)
          entries[b].emplace_back(local, it.col() * n + it.row(), it.value());
    }
  }
  for (std::size_t b = 0; b < w.size(); ++b) {
    out[b].stacked.resize(static_cast<Eigen::Index>(out[b].row_ids.size()), w[b].size());
    out[b].stacked.setFromTriplets(entries[b].begin(), entries[b].end());
  }
  return out;
}

/// Column i of M: sum over the blocks of row i of <A_jb, W_b A_ib W_b>.
void schur_column(const ConstraintRows& rows, const std::vector<Eigen::MatrixXd>& w, const std::vector<BlockRows>& idx,
                  std::size_t i, Eigen::MatrixXd& m) {
  for (const auto& entry : rows[i]) {
    const auto b = static_cast<std::size_t>(entry.block);
    const auto& wb = w[b];
    Eigen::MatrixXd p;
    if (entry.matrix.nonZeros() < wb.rows()) {
      p = Eigen::MatrixXd::Zero(wb.rows(), wb.cols());
      for (Eigen::Index k = 0; k < entry.matrix.outerSize(); ++k)
        for (SparseBlock::InnerIterator it(entry.matrix, k); it; ++it)
          p.noalias() += it.value() * wb.col(it.row()) * wb.row(it.col());
    } else {
      const Eigen::MatrixXd aw = entry.matrix * wb;
      p.noalias() = wb * aw;
    }
    const Eigen::VectorXd col = idx[b].stacked * Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < idx[b].row_ids.size(); ++k) m(idx[b].row_ids[k], ii) += col(static_cast<Eigen::Index>(k));
  }
}

void symmetrize(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
}

double overlap(const HermitianOperator& a, const HermitianOperator& b) {
  // Re Tr[a b] = sum_ij Re(a_ij conj(b_ij)) for Hermitian b
  return (a.matrix().array() * b.matrix().conjugate().array()).real().sum();
}

void check_signatures(const std::vector<HermitianOperator>& a, const std::vector<HermitianOperator>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (!(x.signature() == y.signature())) throw Error(ErrorKind::signature_mismatch, "overlap table signatures");
}

}  // namespace

double sparse_inner(const SparseBlock& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SparseBlock::InnerIterator it(a, k); it; ++it) s += it.value() * b(it.row(), it.col());
  return s;
}

Eigen::MatrixXd schur_complement_serial(const ConstraintRows& rows, const std::vector<Eigen::MatrixXd>& w) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto idx = index_rows(rows, w);
  for (std::size_t i = 0; i < rows.size(); ++i) schur_column(rows, w, idx, i, m);
  symmetrize(m);
  return m;
}

Eigen::MatrixXd schur_complement_parallel(const ConstraintRows& rows, const std::vector<Eigen::MatrixXd>& w) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto idx = index_rows(rows, w);
  const auto count = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_budget())
  for (long i = 0; i < count; ++i) schur_column(rows, w, idx, static_cast<std::size_t>(i), m);
  symmetrize(m);
  return m;
}

Eigen::MatrixXd overlap_table_serial(const std::vector<HermitianOperator>& a, const std::vector<HermitianOperator>& b) {
  check_signatures(a, b);
  Eigen::MatrixXd t(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = overlap(a[i], b[j]);
  return t;
}

Eigen::MatrixXd overlap_table_parallel(const std::vector<HermitianOperator>& a,
                                       const std::vector<HermitianOperator>& b) {
  check_signatures(a, b);
  Eigen::MatrixXd t(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  const long total = static_cast<long>(a.size() * b.size());
  const std::size_t nb = b.size();
#pragma omp parallel for schedule(static) num_threads(thread_budget())
  for (long k = 0; k < total; ++k) {
    const auto i = static_cast<std::size_t>(k) / nb;
    const auto j = static_cast<std::size_t>(k) % nb;
    t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = overlap(a[i], b[j]);
  }
  return t;
}

int thread_budget() {
  if (const char* env = std::getenv("COMBFORGE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

}  // namespace combforge
