#include "combforge/random.hpp"

#include <cmath>

namespace combforge {

Matrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Matrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

Matrix haar_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows < cols) throw Error(ErrorKind::invalid_input, "haar_isometry needs rows >= cols");
  const Matrix g = ginibre(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const auto r = static_cast<Eigen::Index>(rows);
  const auto c = static_cast<Eigen::Index>(cols);
  Matrix q = qr.householderQ() * Matrix::Identity(r, c);
  const Matrix rr = qr.matrixQR().topLeftCorner(c, c).triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < c; ++k) {
    const Complex d = rr(k, k);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(k) *= d / mag;
  }
  return q;
}

std::vector<double> dirichlet_uniform(std::size_t count, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(count);
  double total = 0.0;
  for (auto& x : w) {
    x = expo(rng);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

Eigen::MatrixXd random_stochastic(std::size_t rows, std::size_t cols, Rng& rng) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    const auto col = dirichlet_uniform(rows, rng);
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = col[static_cast<std::size_t>(i)];
  }
  return t;
}

}  // namespace combforge
