#include "combforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace combforge {

namespace {

std::vector<std::size_t> strides_of(const std::vector<System>& systems) {
  std::vector<std::size_t> strides(systems.size(), 1);
  for (std::size_t k = systems.size(); k-- > 1;) {
    strides[k - 1] = strides[k] * static_cast<std::size_t>(systems[k].dim);
  }
  return strides;
}

std::size_t product_of_dims(const std::vector<System>& systems) {
  std::size_t total = 1;
  for (const auto& s : systems) total *= static_cast<std::size_t>(s.dim);
  return total;
}

void check_role(const std::vector<System>& systems, Role role) {
  if (role == Role::generic) return;
  const char* name = role == Role::comb ? "comb" : "tester";
  if (systems.size() < 2 || systems.size() % 2 != 0) {
    throw Error(ErrorKind::signature_mismatch,
                std::string(name) + " signature needs an even, nonzero number of systems");
  }
  for (std::size_t k = 0; k < systems.size(); ++k) {
    if (systems[k].index != static_cast<int>(k)) {
      throw Error(ErrorKind::signature_mismatch,
                  std::string(name) + " signature must use consecutive indices 0..N-1");
    }
  }
}

Signature consecutive(std::span<const int> dims, Role role) {
  std::vector<System> systems;
  systems.reserve(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) systems.push_back({static_cast<int>(k), dims[k]});
  return Signature(std::move(systems), role);
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// Signature

Signature::Signature(std::vector<System> systems, Role role) : systems_(std::move(systems)), role_(role) {
  std::sort(systems_.begin(), systems_.end(),
            [](const System& a, const System& b) { return a.index < b.index; });
  for (std::size_t k = 0; k < systems_.size(); ++k) {
    if (systems_[k].index < 0) throw Error(ErrorKind::invalid_input, "system index must be >= 0");
    if (systems_[k].dim < 1) throw Error(ErrorKind::invalid_input, "system dimension must be >= 1");
    if (k > 0 && systems_[k].index == systems_[k - 1].index) {
      throw Error(ErrorKind::index_collision, "duplicate system index " + std::to_string(systems_[k].index));
    }
  }
  check_role(systems_, role_);
}

Signature Signature::comb(std::span<const int> dims) { return consecutive(dims, Role::comb); }
Signature Signature::tester(std::span<const int> dims) { return consecutive(dims, Role::tester); }

int Signature::slots() const noexcept {
  switch (role_) {
    case Role::comb: return static_cast<int>(systems_.size() / 2) - 1;
    case Role::tester: return static_cast<int>(systems_.size() / 2);
    case Role::generic: return -1;
  }
  return -1;
}

std::size_t Signature::total_dim() const noexcept { return product_of_dims(systems_); }

std::size_t Signature::output_dim() const noexcept {
  std::size_t d = 1;
  for (const auto& s : systems_) {
    if (s.index % 2 == 1) d *= static_cast<std::size_t>(s.dim);
  }
  return d;
}

std::size_t Signature::input_dim() const noexcept {
  std::size_t d = 1;
  for (const auto& s : systems_) {
    if (s.index % 2 == 0) d *= static_cast<std::size_t>(s.dim);
  }
  return d;
}

bool Signature::contains(int index) const noexcept {
  return std::any_of(systems_.begin(), systems_.end(), [&](const System& s) { return s.index == index; });
}

int Signature::dim_of(int index) const { return systems_[position(index)].dim; }

std::size_t Signature::position(int index) const {
  for (std::size_t k = 0; k < systems_.size(); ++k) {
    if (systems_[k].index == index) return k;
  }
  throw Error(ErrorKind::index_not_found, "system " + std::to_string(index) + " not in signature");
}

std::vector<int> Signature::indices() const {
  std::vector<int> out;
  out.reserve(systems_.size());
  for (const auto& s : systems_) out.push_back(s.index);
  return out;
}

std::vector<int> Signature::dims() const {
  std::vector<int> out;
  out.reserve(systems_.size());
  for (const auto& s : systems_) out.push_back(s.dim);
  return out;
}

Signature Signature::without(std::span<const int> removed) const {
  for (int idx : removed) (void)position(idx);
  std::vector<System> kept;
  for (const auto& s : systems_) {
    if (std::find(removed.begin(), removed.end(), s.index) == removed.end()) kept.push_back(s);
  }
  return Signature(std::move(kept));
}

Signature Signature::prefix(std::size_t count) const {
  return Signature(std::vector<System>(systems_.begin(), systems_.begin() + static_cast<std::ptrdiff_t>(count)));
}

Signature Signature::with_role(Role role) const { return Signature(systems_, role); }

// ---------------------------------------------------------------------------
// detail

namespace detail {

std::vector<std::size_t> reorder_permutation(const std::vector<System>& from, const std::vector<System>& to) {
  const std::size_t total = product_of_dims(from);
  const auto from_strides = strides_of(from);
  const auto to_strides = strides_of(to);
  // stride in the target layout for every factor of the source layout
  std::vector<std::size_t> target_stride(from.size());
  for (std::size_t k = 0; k < from.size(); ++k) {
    auto it = std::find_if(to.begin(), to.end(), [&](const System& s) { return s.index == from[k].index; });
    if (it == to.end() || it->dim != from[k].dim) {
      throw Error(ErrorKind::signature_mismatch, "reorder between different system sets");
    }
    target_stride[k] = to_strides[static_cast<std::size_t>(it - to.begin())];
  }
  std::vector<std::size_t> p(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    std::size_t j = 0;
    for (std::size_t k = 0; k < from.size(); ++k) {
      const std::size_t digit = rest / from_strides[k];
      rest %= from_strides[k];
      j += digit * target_stride[k];
    }
    p[i] = j;
  }
  return p;
}

Matrix permute(const Matrix& m, const std::vector<std::size_t>& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out(static_cast<Eigen::Index>(p[static_cast<std::size_t>(i)]),
          static_cast<Eigen::Index>(p[static_cast<std::size_t>(j)])) = m(i, j);
    }
  }
  return out;
}

Matrix partial_trace_matrix(const Matrix& m, const Signature& signature, std::span<const int> traced) {
  const auto& systems = signature.systems();
  std::vector<bool> is_traced(systems.size(), false);
  for (int idx : traced) is_traced[signature.position(idx)] = true;

  const auto strides = strides_of(systems);
  std::size_t traced_dim = 1;
  std::size_t kept_dim = 1;
  for (std::size_t k = 0; k < systems.size(); ++k) {
    (is_traced[k] ? traced_dim : kept_dim) *= static_cast<std::size_t>(systems[k].dim);
  }
  const std::size_t total = traced_dim * kept_dim;

  // full index for every (traced, kept) pair
  std::vector<std::size_t> full(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    std::size_t t = 0;
    std::size_t kk = 0;
    for (std::size_t k = 0; k < systems.size(); ++k) {
      const std::size_t digit = rest / strides[k];
      rest %= strides[k];
      const auto d = static_cast<std::size_t>(systems[k].dim);
      if (is_traced[k]) {
        t = t * d + digit;
      } else {
        kk = kk * d + digit;
      }
    }
    full[t * kept_dim + kk] = i;
  }

  const auto kd = static_cast<Eigen::Index>(kept_dim);
  Matrix out = Matrix::Zero(kd, kd);
  for (std::size_t t = 0; t < traced_dim; ++t) {
    const std::size_t* rows = full.data() + t * kept_dim;
    for (Eigen::Index c = 0; c < kd; ++c) {
      const auto fc = static_cast<Eigen::Index>(rows[c]);
      for (Eigen::Index r = 0; r < kd; ++r) {
        out(r, c) += m(static_cast<Eigen::Index>(rows[r]), fc);
      }
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// HermitianOperator

HermitianOperator::HermitianOperator() : matrix_(Matrix::Zero(1, 1)) {}

HermitianOperator::HermitianOperator(Signature signature, Matrix matrix)
    : signature_(std::move(signature)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(signature_.total_dim());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw Error(ErrorKind::signature_mismatch,
                "matrix side " + std::to_string(matrix_.rows()) + " does not match signature dimension " +
                    std::to_string(n));
  }
  const double asym = max_abs(matrix_ - matrix_.adjoint());
  if (asym > 1e-9 * (1.0 + max_abs(matrix_))) {
    throw Error(ErrorKind::not_hermitian, "matrix is not Hermitian (max |M - M^dag| = " + std::to_string(asym) + ")");
  }
  matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
}

HermitianOperator::HermitianOperator(Signature signature, Matrix matrix, TrustedTag)
    : signature_(std::move(signature)), matrix_(std::move(matrix)) {
  matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
}

HermitianOperator HermitianOperator::trusted(Signature signature, Matrix matrix) {
  return HermitianOperator(std::move(signature), std::move(matrix), TrustedTag{});
}

HermitianOperator HermitianOperator::identity(const Signature& signature) {
  const auto n = static_cast<Eigen::Index>(signature.total_dim());
  return HermitianOperator(signature, Matrix::Identity(n, n), TrustedTag{});
}

HermitianOperator HermitianOperator::zero(const Signature& signature) {
  const auto n = static_cast<Eigen::Index>(signature.total_dim());
  return HermitianOperator(signature, Matrix::Zero(n, n), TrustedTag{});
}

HermitianOperator HermitianOperator::scalar(double value) {
  return HermitianOperator(Signature{}, Matrix::Constant(1, 1, Complex(value, 0.0)), TrustedTag{});
}

HermitianOperator HermitianOperator::from_factors(const Matrix& matrix, std::vector<System> order) {
  Signature canonical(order);
  const auto p = detail::reorder_permutation(order, canonical.systems());
  return HermitianOperator(std::move(canonical), detail::permute(matrix, p));
}

double HermitianOperator::trace() const { return matrix_.trace().real(); }

double HermitianOperator::frobenius_norm() const { return matrix_.norm(); }

double HermitianOperator::frobenius_distance(const HermitianOperator& other) const {
  if (!(signature_ == other.signature_)) throw Error(ErrorKind::signature_mismatch, "frobenius_distance");
  return (matrix_ - other.matrix_).norm();
}

HermitianOperator HermitianOperator::transpose() const {
  return HermitianOperator(signature_, matrix_.transpose(), TrustedTag{});
}

HermitianOperator HermitianOperator::with_signature(Signature signature) const {
  if (signature.total_dim() != signature_.total_dim()) {
    throw Error(ErrorKind::signature_mismatch, "with_signature: dimension differs");
  }
  return HermitianOperator(std::move(signature), matrix_, TrustedTag{});
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& other) {
  if (!(signature_ == other.signature_)) throw Error(ErrorKind::signature_mismatch, "operator+ on different signatures");
  matrix_ += other.matrix_;
  return *this;
}

HermitianOperator& HermitianOperator::operator-=(const HermitianOperator& other) {
  if (!(signature_ == other.signature_)) throw Error(ErrorKind::signature_mismatch, "operator- on different signatures");
  matrix_ -= other.matrix_;
  return *this;
}

HermitianOperator& HermitianOperator::operator*=(double factor) {
  matrix_ *= factor;
  return *this;
}

// ---------------------------------------------------------------------------
// free functions

double inner(const HermitianOperator& a, const HermitianOperator& b) {
  if (!(a.signature() == b.signature())) throw Error(ErrorKind::signature_mismatch, "inner product");
  // Tr[AB] = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B
  return (a.matrix().array() * b.matrix().conjugate().array()).sum().real();
}

HermitianOperator kron_compose(const HermitianOperator& a, const HermitianOperator& b) {
  for (const auto& s : b.signature().systems()) {
    if (a.signature().contains(s.index)) {
      throw Error(ErrorKind::index_collision, "kron_compose: system " + std::to_string(s.index) + " in both operands");
    }
  }
  const Matrix& ma = a.matrix();
  const Matrix& mb = b.matrix();
  Matrix raw(ma.rows() * mb.rows(), ma.cols() * mb.cols());
  for (Eigen::Index i = 0; i < ma.rows(); ++i) {
    for (Eigen::Index j = 0; j < ma.cols(); ++j) {
      raw.block(i * mb.rows(), j * mb.cols(), mb.rows(), mb.cols()) = ma(i, j) * mb;
    }
  }
  std::vector<System> order = a.signature().systems();
  order.insert(order.end(), b.signature().systems().begin(), b.signature().systems().end());
  Signature canonical(order);
  const auto p = detail::reorder_permutation(order, canonical.systems());
  return HermitianOperator::trusted(std::move(canonical), detail::permute(raw, p));
}

HermitianOperator partial_trace(const HermitianOperator& op, std::span<const int> traced) {
  const auto& sig = op.signature();
  for (int idx : traced) {
    if (!sig.contains(idx)) {
      throw Error(ErrorKind::index_not_found, "partial_trace: system " + std::to_string(idx) + " not present");
    }
  }
  if (traced.empty()) return op;
  return HermitianOperator::trusted(sig.without(traced), detail::partial_trace_matrix(op.matrix(), sig, traced));
}

HermitianOperator embed_identity(const HermitianOperator& op, const Signature& full) {
  std::vector<System> missing;
  for (const auto& s : op.signature().systems()) {
    if (!full.contains(s.index)) {
      throw Error(ErrorKind::signature_mismatch, "embed_identity: system " + std::to_string(s.index) + " not in target");
    }
    if (full.dim_of(s.index) != s.dim) {
      throw Error(ErrorKind::signature_mismatch, "embed_identity: dimension mismatch on system " + std::to_string(s.index));
    }
  }
  for (const auto& s : full.systems()) {
    if (!op.signature().contains(s.index)) missing.push_back(s);
  }
  if (missing.empty()) return op.with_signature(full);
  auto result = kron_compose(op, HermitianOperator::identity(Signature(missing)));
  return result.with_signature(full);
}

HermitianOperator partial_transpose(const HermitianOperator& op, std::span<const int> systems) {
  const auto& sig = op.signature();
  std::vector<bool> flip(sig.size(), false);
  for (int idx : systems) flip[sig.position(idx)] = true;
  const auto strides = strides_of(sig.systems());
  const std::size_t n = sig.total_dim();
  std::vector<std::size_t> flipped_part(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    for (std::size_t k = 0; k < sig.size(); ++k) {
      const std::size_t digit = rest / strides[k];
      rest %= strides[k];
      if (flip[k]) flipped_part[i] += digit * strides[k];
    }
  }
  const Matrix& m = op.matrix();
  Matrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t i2 = i - flipped_part[i] + flipped_part[j];
      const std::size_t j2 = j - flipped_part[j] + flipped_part[i];
      out(static_cast<Eigen::Index>(i2), static_cast<Eigen::Index>(j2)) =
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return HermitianOperator::trusted(sig, std::move(out));
}

namespace {
Eigen::SelfAdjointEigenSolver<Matrix> eigensolve(const HermitianOperator& op, bool vectors) {
  const Matrix sym = 0.5 * (op.matrix() + op.matrix().adjoint());
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
}
}  // namespace

double min_eigenvalue(const HermitianOperator& op) { return eigensolve(op, false).eigenvalues().minCoeff(); }

double max_eigenvalue(const HermitianOperator& op) { return eigensolve(op, false).eigenvalues().maxCoeff(); }

HermitianOperator inv_sqrt_support(const HermitianOperator& op, double tolerance) {
  const auto es = eigensolve(op, true);
  Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() < -tolerance) {
    throw Error(ErrorKind::not_positive, "inv_sqrt_support: eigenvalue " + std::to_string(lam.minCoeff()));
  }
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = lam(i) > tolerance ? 1.0 / std::sqrt(lam(i)) : 0.0;
  const Matrix& u = es.eigenvectors();
  return HermitianOperator::trusted(op.signature(), u * lam.cast<Complex>().asDiagonal() * u.adjoint());
}

HermitianOperator sqrt_psd(const HermitianOperator& op, double tolerance) {
  const auto es = eigensolve(op, true);
  Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() < -tolerance) {
    throw Error(ErrorKind::not_positive, "sqrt_psd: eigenvalue " + std::to_string(lam.minCoeff()));
  }
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = std::sqrt(std::max(lam(i), 0.0));
  const Matrix& u = es.eigenvectors();
  return HermitianOperator::trusted(op.signature(), u * lam.cast<Complex>().asDiagonal() * u.adjoint());
}

HermitianOperator conjugate(const HermitianOperator& op, const Matrix& k) {
  return HermitianOperator::trusted(op.signature(), k * op.matrix() * k.adjoint());
}

HermitianOperator link_product(const HermitianOperator& a, const HermitianOperator& b) {
  std::vector<int> shared;
  std::vector<System> all = a.signature().systems();
  for (const auto& s : b.signature().systems()) {
    if (a.signature().contains(s.index)) {
      if (a.signature().dim_of(s.index) != s.dim) {
        throw Error(ErrorKind::signature_mismatch, "link_product: wire " + std::to_string(s.index) + " dimension differs");
      }
      shared.push_back(s.index);
    } else {
      all.push_back(s);
    }
  }
  if (shared.empty()) return kron_compose(a, b);
  const Signature joint(all);
  const auto ae = embed_identity(partial_transpose(a, shared), joint);
  const auto be = embed_identity(b, joint);
  const Matrix product = ae.matrix() * be.matrix();
  return HermitianOperator::trusted(joint.without(shared), detail::partial_trace_matrix(product, joint, shared));
}

bool is_psd(const HermitianOperator& op, double floor) { return min_eigenvalue(op) >= -floor; }

}  // namespace combforge
