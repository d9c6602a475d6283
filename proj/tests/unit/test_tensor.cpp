#include <gtest/gtest.h>

#include <vector>

#include "combforge/comb.hpp"
#include "combforge/random.hpp"
#include "combforge/tensor.hpp"

using namespace combforge;

namespace {

HermitianOperator random_herm(const Signature& sig, Rng& rng) {
  const auto d = sig.total_dim();
  const Matrix g = ginibre(d, d, rng);
  return HermitianOperator(sig, (g + g.adjoint()) / 2.0);
}

HermitianOperator ket_bra(const Signature& sig, Eigen::Index i) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(sig.total_dim()), static_cast<Eigen::Index>(sig.total_dim()));
  m(i, i) = 1.0;
  return HermitianOperator(sig, m);
}

}  // namespace

TEST(Signature, SortsAndRejectsDuplicates) {
  Signature s({{3, 2}, {0, 3}, {1, 4}});
  EXPECT_EQ(s.indices(), (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(s.total_dim(), 24u);
  try {
    Signature bad({{1, 2}, {1, 2}});
    FAIL() << "duplicate index accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::index_collision);
  }
}

TEST(Signature, RoleChecksAndDimensionProducts) {
  const int dims[] = {2, 3, 5, 7};
  const auto s = Signature::comb(dims);
  EXPECT_EQ(s.slots(), 1);
  EXPECT_EQ(s.input_dim(), 10u);
  EXPECT_EQ(s.output_dim(), 21u);
  const int odd[] = {2, 3, 5};
  EXPECT_THROW(Signature::tester(odd), Error);
  EXPECT_THROW((void)s.position(9), Error);
}

TEST(HermitianOperator, RejectsNonHermitian) {
  Matrix m(2, 2);
  m << 1.0, 1.0, 0.0, 1.0;
  try {
    HermitianOperator op(Signature({{0, 2}}), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_hermitian);
  }
}

TEST(PartialTrace, OfProductIsScaledFactor) {
  Rng rng(1);
  const auto a = random_herm(Signature({{0, 2}}), rng);
  const auto b = random_herm(Signature({{1, 3}}), rng);
  const auto ab = kron_compose(a, b);
  const int tr1[] = {1};
  const int tr0[] = {0};
  EXPECT_LT(partial_trace(ab, tr1).frobenius_distance(a * b.trace()), 1e-12);
  EXPECT_LT(partial_trace(ab, tr0).frobenius_distance(b * a.trace()), 1e-12);
}

TEST(PartialTrace, MiddleSystemMatchesExplicitSum) {
  Rng rng(2);
  const Signature sig({{0, 2}, {1, 3}, {2, 2}});
  const auto x = random_herm(sig, rng);
  const int tr[] = {1};
  const auto r = partial_trace(x, tr);
  Matrix expect = Matrix::Zero(4, 4);
  for (int i0 = 0; i0 < 2; ++i0)
    for (int i2 = 0; i2 < 2; ++i2)
      for (int j0 = 0; j0 < 2; ++j0)
        for (int j2 = 0; j2 < 2; ++j2)
          for (int k = 0; k < 3; ++k) expect(i0 * 2 + i2, j0 * 2 + j2) += x.matrix()(i0 * 6 + k * 2 + i2, j0 * 6 + k * 2 + j2);
  EXPECT_LT((r.matrix() - expect).norm(), 1e-12);
}

TEST(Kron, ReordersToAscendingIndices) {
  const auto a = ket_bra(Signature({{2, 2}}), 1);
  const auto b = ket_bra(Signature({{0, 3}}), 2);
  const auto ab = kron_compose(a, b);
  EXPECT_EQ(ab.signature().indices(), (std::vector<int>{0, 2}));
  EXPECT_NEAR(ab.matrix()(5, 5).real(), 1.0, 1e-15);
  EXPECT_NEAR(ab.trace(), 1.0, 1e-15);
}

TEST(Kron, OverlapIsCollision) {
  const auto a = HermitianOperator::identity(Signature({{0, 2}}));
  EXPECT_THROW(kron_compose(a, a), Error);
}

TEST(EmbedIdentity, TraceScalesByMissingDims) {
  Rng rng(3);
  const auto a = random_herm(Signature({{1, 2}}), rng);
  const auto e = embed_identity(a, Signature({{0, 3}, {1, 2}, {2, 2}}));
  EXPECT_NEAR(e.trace(), 6.0 * a.trace(), 1e-12);
}

TEST(PartialTranspose, FullTransposeMatchesMatrixTranspose) {
  Rng rng(4);
  const auto x = random_herm(Signature({{0, 2}, {1, 2}}), rng);
  const int both[] = {0, 1};
  EXPECT_LT((partial_transpose(x, both).matrix() - x.matrix().transpose()).norm(), 1e-14);
  EXPECT_LT(x.transpose().frobenius_distance(partial_transpose(x, both)), 1e-14);
}

TEST(LinkProduct, ComposesChannels) {
  // identity channel 0->1 linked with identity 1->2 is identity 0->2
  const auto id01 = identity_channel({0, 2}, {1, 2});
  const auto id12 = identity_channel({1, 2}, {2, 2});
  const auto id02 = identity_channel({0, 2}, {2, 2});
  EXPECT_LT(link_product(id01, id12).frobenius_distance(id02), 1e-12);
}

TEST(LinkProduct, StateThroughChannelIsOutputState) {
  Rng rng(5);
  const auto j = random_channel({{0, 2}}, {{1, 3}}, rng);
  const Matrix g = ginibre(2, 2, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  const HermitianOperator state(Signature({{0, 2}}), rho);
  const auto out = link_product(state, j);
  // direct evaluation: N(rho) = Tr_0[(rho^T (x) 1) J]
  const auto direct = partial_trace(
      HermitianOperator::trusted(j.signature(), embed_identity(state.transpose(), j.signature()).matrix() * j.matrix()),
      std::vector<int>{0});
  EXPECT_LT(out.frobenius_distance(direct), 1e-12);
  EXPECT_NEAR(out.trace(), 1.0, 1e-12);
  EXPECT_GT(min_eigenvalue(out), -1e-12);
}

TEST(LinkProduct, DimensionMismatchIsReported) {
  const auto a = HermitianOperator::identity(Signature({{0, 2}, {1, 2}}));
  const auto b = HermitianOperator::identity(Signature({{1, 3}, {2, 2}}));
  try {
    (void)link_product(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::signature_mismatch);
  }
}

TEST(Spectral, InvSqrtOnSupport) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 4.0;
  const HermitianOperator p(Signature({{0, 2}}), m);
  const auto r = inv_sqrt_support(p, 1e-12);
  EXPECT_NEAR(r.matrix()(0, 0).real(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(r.matrix()(1, 1)), 0.0, 1e-14);
  const auto s = sqrt_psd(p, 1e-12);
  EXPECT_NEAR(s.matrix()(0, 0).real(), 2.0, 1e-14);
  m(1, 1) = -1.0;
  EXPECT_THROW(inv_sqrt_support(HermitianOperator(Signature({{0, 2}}), m), 1e-9), Error);
}

TEST(Random, HaarIsometryIsIsometric) {
  Rng rng(6);
  const auto v = haar_isometry(6, 3, rng);
  EXPECT_LT((v.adjoint() * v - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(Random, DirichletIsDistribution) {
  Rng rng(7);
  const auto w = dirichlet_uniform(5, rng);
  double total = 0.0;
  for (double x : w) {
    EXPECT_GE(x, 0.0);
    total += x;
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Inner, IsHilbertSchmidt) {
  Rng rng(8);
  const Signature s({{0, 3}});
  const auto a = random_herm(s, rng);
  const auto b = random_herm(s, rng);
  EXPECT_NEAR(inner(a, b), (a.matrix() * b.matrix()).trace().real(), 1e-12);
}
