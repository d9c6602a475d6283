#pragma once

// Dense operators over ordered tensor products of labeled systems.
//
// Every operator carries a Signature: the list of (index, dim) systems it acts
// on, always sorted by ascending index. Matrix indices follow the Kronecker
// convention with the lowest system index as the most significant digit.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "combforge/errors.hpp"

namespace combforge {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

struct System {
  int index = 0;
  int dim = 1;

  friend bool operator==(const System&, const System&) = default;
};

enum class Role { generic, comb, tester };

class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<System> systems, Role role = Role::generic);

  /// Consecutive systems 0..dims.size()-1. A comb needs an even count >= 2.
  static Signature comb(std::span<const int> dims);
  /// Consecutive systems 0..dims.size()-1. A tester needs an even count >= 2.
  static Signature tester(std::span<const int> dims);

  const std::vector<System>& systems() const noexcept { return systems_; }
  std::size_t size() const noexcept { return systems_.size(); }
  bool empty() const noexcept { return systems_.empty(); }
  Role role() const noexcept { return role_; }

  /// n for an n-slot comb (2n+2 systems) or tester (2n systems); -1 otherwise.
  int slots() const noexcept;

  std::size_t total_dim() const noexcept;
  /// Product of odd-indexed dimensions.
  std::size_t output_dim() const noexcept;
  /// Product of even-indexed dimensions.
  std::size_t input_dim() const noexcept;

  bool contains(int index) const noexcept;
  int dim_of(int index) const;
  std::size_t position(int index) const;
  std::vector<int> indices() const;
  std::vector<int> dims() const;

  Signature without(std::span<const int> removed) const;
  /// Systems 0..count-1 of this signature (generic role).
  Signature prefix(std::size_t count) const;
  Signature with_role(Role role) const;

  friend bool operator==(const Signature& a, const Signature& b) { return a.systems_ == b.systems_; }

 private:
  std::vector<System> systems_;
  Role role_ = Role::generic;
};

struct Tolerances {
  double hermiticity = 1e-9;  // relative
  double psd = 1e-8;          // absolute floor on the smallest eigenvalue
  double chain = 1e-7;        // Frobenius residual of comb / tester chains
  double channel = 1e-8;      // Frobenius residual of Tr_out J = 1_in
  double probability = 1e-10;
};

class HermitianOperator {
 public:
  /// The scalar 0 on the empty signature.
  HermitianOperator();
  /// Validates side length and Hermiticity (relative tolerance 1e-9), then
  /// stores the symmetrized matrix.
  HermitianOperator(Signature signature, Matrix matrix);

  /// Symmetrizes without validation; for results of exact-Hermitian algebra.
  static HermitianOperator trusted(Signature signature, Matrix matrix);
  static HermitianOperator identity(const Signature& signature);
  static HermitianOperator zero(const Signature& signature);
  static HermitianOperator scalar(double value);
  /// Matrix given on the factors in `order` (any index order); the result is
  /// permuted into canonical ascending order.
  static HermitianOperator from_factors(const Matrix& matrix, std::vector<System> order);

  const Signature& signature() const noexcept { return signature_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

  double trace() const;
  double frobenius_norm() const;
  double frobenius_distance(const HermitianOperator& other) const;
  HermitianOperator transpose() const;
  HermitianOperator with_signature(Signature signature) const;

  HermitianOperator& operator+=(const HermitianOperator& other);
  HermitianOperator& operator-=(const HermitianOperator& other);
  HermitianOperator& operator*=(double factor);

  friend HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
  friend HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
  friend HermitianOperator operator*(HermitianOperator a, double f) { return a *= f; }
  friend HermitianOperator operator*(double f, HermitianOperator a) { return a *= f; }
  friend HermitianOperator operator/(HermitianOperator a, double f) { return a *= 1.0 / f; }

 private:
  struct TrustedTag {};
  HermitianOperator(Signature signature, Matrix matrix, TrustedTag);

  Signature signature_;
  Matrix matrix_;
};

/// Re Tr[a b]; signatures must match.
double inner(const HermitianOperator& a, const HermitianOperator& b);

HermitianOperator kron_compose(const HermitianOperator& a, const HermitianOperator& b);
HermitianOperator partial_trace(const HermitianOperator& op, std::span<const int> traced);
HermitianOperator embed_identity(const HermitianOperator& op, const Signature& full);
HermitianOperator partial_transpose(const HermitianOperator& op, std::span<const int> systems);
double min_eigenvalue(const HermitianOperator& op);
double max_eigenvalue(const HermitianOperator& op);
/// Pseudo-inverse square root on the support; eigenvalues <= tolerance map to 0.
HermitianOperator inv_sqrt_support(const HermitianOperator& op, double tolerance);
HermitianOperator sqrt_psd(const HermitianOperator& op, double tolerance);
/// k * op * k^dagger.
HermitianOperator conjugate(const HermitianOperator& op, const Matrix& k);

/// Link product A * B = Tr_S[(A^{T_S} (x) 1)(1 (x) B)] over the shared systems S.
HermitianOperator link_product(const HermitianOperator& a, const HermitianOperator& b);

bool is_psd(const HermitianOperator& op, double floor = 1e-8);

namespace detail {
/// Partial trace on a raw (not necessarily Hermitian) matrix.
Matrix partial_trace_matrix(const Matrix& m, const Signature& signature, std::span<const int> traced);
/// Permutation p with new_index = p[old_index] for reordering factors from
/// `from` order into `to` order (same multiset of systems).
std::vector<std::size_t> reorder_permutation(const std::vector<System>& from, const std::vector<System>& to);
Matrix permute(const Matrix& m, const std::vector<std::size_t>& p);
}  // namespace detail

}  // namespace combforge
