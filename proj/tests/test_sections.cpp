#include <catch_amalgamated.hpp>

#include <Eigen/SVD>
#include <cmath>

#include "fkdet/sections.hpp"
#include "support/gen.hpp"

using namespace fkdet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GroupDescriptor Z1 = GroupDescriptor::lattice(1);

IntegerElement laurent(std::initializer_list<std::pair<std::int64_t, std::int64_t>> terms) {
  std::vector<IntegerElement::Term> t;
  for (auto [k, c] : terms) t.emplace_back(GroupElement{k}, Integer(c));
  return IntegerElement::from_terms(Z1, std::move(t));
}

IntegerElement heis_laplacian(std::int64_t c) {
  const auto H = GroupDescriptor::heisenberg();
  std::vector<IntegerElement::Term> t{{GroupElement{0, 0, 0}, Integer(c)},
                                      {GroupElement{1, 0, 0}, Integer(1)},
                                      {GroupElement{-1, 0, 0}, Integer(1)},
                                      {GroupElement{0, 1, 0}, Integer(1)},
                                      {GroupElement{0, -1, 0}, Integer(1)}};
  return IntegerElement::from_terms(H, std::move(t));
}

double largest_singular(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("compress examples", "[sections]") {
  const auto f = laurent({{0, 3}, {1, 1}, {-1, 1}});
  const auto M = compress(f, box_window(Z1, {0}, {2}));
  const IntMatrix expected{{3, 1, 0}, {1, 3, 1}, {0, 1, 3}};
  CHECK(M.to_exact() == expected);

  const auto H = GroupDescriptor::heisenberg();
  const auto I = compress(IntegerElement::identity(H), folner_window(H, 1));
  CHECK(I.to_exact() == IntMatrix::identity(27));
  CHECK(I.nonzeros() == 27);
  CHECK(I.is_sparse());

  const auto Z3 = GroupDescriptor::cyclic_product({3});
  std::vector<IntegerElement::Term> t{{GroupElement{0}, Integer(2)}, {GroupElement{1}, Integer(1)}};
  const auto C = compress(IntegerElement::from_terms(Z3, t), full_group(Z3));
  const IntMatrix circ{{2, 0, 1}, {1, 2, 0}, {0, 1, 2}};
  CHECK(C.to_exact() == circ);
  CHECK_FALSE(C.is_sparse());

  CHECK_THROWS_AS(compress(f, folner_window(GroupDescriptor::lattice(2), 1)), DomainError);
}

TEST_CASE("compress entry formula and sparsity bound", "[sections][property]") {
  gen::Rng r(21);
  for (const auto& G : {GroupDescriptor::lattice(2), GroupDescriptor::heisenberg(), GroupDescriptor::cyclic_product({3, 5})}) {
    const auto F = std::make_shared<const FolnerWindow>(folner_window(G, 2));
    for (int t = 0; t < 10; ++t) {
      const auto f = gen::integer_element(r, G, 5, 5, 2);
      const auto M = compress(f, F);
      CHECK(M.nonzeros() <= f.support_size() * F->size());
      for (std::size_t i = 0; i < F->size(); i += 3)
        for (std::size_t j = 0; j < F->size(); j += 2)
          CHECK(M.entry(i, j) == f.coefficient(multiply(G, (*F)[i], inverse(G, (*F)[j]))));
    }
  }
}

TEST_CASE("compression of the adjoint is the conjugate transpose", "[sections][property]") {
  gen::Rng r(22);
  for (const auto& G : {GroupDescriptor::lattice(1), GroupDescriptor::lattice(2), GroupDescriptor::heisenberg(),
                        GroupDescriptor::cyclic_product({4, 3})}) {
    const auto F = std::make_shared<const FolnerWindow>(folner_window(G, 2));
    for (int t = 0; t < 10; ++t) {
      const auto f = gen::integer_element(r, G, 6, 5, 3);
      CHECK(compress(adjoint(f), F).to_exact() == compress(f, F).to_exact().transposed());
      const auto fc = to_complex(f);
      const Complex i(0, 1);
      const auto g = add(fc, scale(to_complex(gen::integer_element(r, G, 3, 3, 2)), i));
      const Eigen::MatrixXcd A = compress(g, F).to_dense<Complex>();
      const Eigen::MatrixXcd B = compress(adjoint(g), F).to_dense<Complex>();
      CHECK(B == A.adjoint());
    }
  }
}

TEST_CASE("certify_invertible examples", "[sections]") {
  const auto f = laurent({{0, 3}, {1, 1}, {-1, 1}});
  const auto tm = certify_invertible(f, CertificateMethod::torus_min, {64});
  CHECK(tm.certified);
  CHECK(tm.sigma_min_lower > 0.9);
  CHECK(tm.sigma_min_lower <= 1.0);
  REQUIRE(tm.lipschitz);
  CHECK_THAT(*tm.lipschitz, WithinRel(4 * std::numbers::pi, 1e-15));
  CHECK(*tm.grid_size == 64);

  const auto ln = certify_invertible(laurent({{0, 3}, {1, 1}}), CertificateMethod::l1_neumann);
  CHECK(ln.certified);
  REQUIRE(ln.inverse_norm_upper);
  CHECK_THAT(*ln.inverse_norm_upper, WithinAbs(0.5, 1e-15));
  CHECK(*ln.inverse_norm_upper >= 0.5);

  const auto pg = certify_invertible(heis_laplacian(5), CertificateMethod::positive_gap);
  CHECK(pg.certified);
  CHECK(pg.sigma_min_lower == 1.0);
  REQUIRE(pg.spectrum);
  CHECK(pg.spectrum->first == 1.0);
  CHECK(pg.spectrum->second == 9.0);
  CHECK(*pg.residual_l1 == 4.0);
}

TEST_CASE("certificates report unmet preconditions without claiming singularity", "[sections]") {
  const auto H = heis_laplacian(5);
  auto c = certify_invertible(H, CertificateMethod::torus_min);
  CHECK_FALSE(c.certified);
  CHECK_FALSE(c.reason.empty());

  c = certify_invertible(laurent({{0, 2}, {1, 1}, {-1, 1}}), CertificateMethod::l1_neumann);
  CHECK_FALSE(c.certified);

  c = certify_invertible(laurent({{0, 5}, {1, 1}}), CertificateMethod::positive_gap);
  CHECK_FALSE(c.certified);
  CHECK(c.reason.find("self-adjoint") != std::string::npos);

  // 2 + u + u^-1 vanishes at -1: the grid bound can never be positive.
  for (std::int64_t N : {16, 64, 256, 1024}) {
    c = certify_invertible(laurent({{0, 2}, {1, 1}, {-1, 1}}), CertificateMethod::torus_min, {N});
    CHECK_FALSE(c.certified);
    CHECK(c.sigma_min_lower == 0.0);
  }
}

TEST_CASE("certificate method names", "[sections]") {
  for (auto m : {CertificateMethod::torus_min, CertificateMethod::l1_neumann, CertificateMethod::positive_gap})
    CHECK(parse_certificate_method(to_string(m)) == m);
  CHECK(to_string(CertificateMethod::torus_min) == "torus-min");
  CHECK_THROWS_AS(parse_certificate_method("bogus"), DomainError);
}

TEST_CASE("torus-min bound does not decrease under grid refinement", "[sections][property]") {
  const GroupDescriptor Z2 = GroupDescriptor::lattice(2);
  std::vector<IntegerElement> symbols{laurent({{0, 3}, {1, 1}, {-1, 1}}), laurent({{0, 4}, {1, -1}, {3, 1}}),
                                      laurent({{0, 5}, {2, 2}, {-1, 1}})};
  std::vector<IntegerElement::Term> t{{GroupElement{0, 0}, Integer(6)}, {GroupElement{1, 0}, Integer(1)},
                                      {GroupElement{0, 1}, Integer(-1)}, {GroupElement{1, 1}, Integer(2)}};
  const auto g = IntegerElement::from_terms(Z2, t);
  for (const auto& f : symbols) {
    double prev = 0.0;
    for (std::int64_t N = 8; N <= 2048; N *= 2) {
      const double b = certify_invertible(f, CertificateMethod::torus_min, {N}).sigma_min_lower;
      CHECK(b >= prev);
      prev = b;
    }
  }
  double prev = 0.0;
  for (std::int64_t N = 8; N <= 256; N *= 2) {
    const double b = certify_invertible(g, CertificateMethod::torus_min, {N}).sigma_min_lower;
    CHECK(b >= prev);
    prev = b;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("sigma_min_estimate examples", "[sections]") {
  CHECK_THAT(sigma_min_estimate(compress(IntegerElement::identity(Z1), box_window(Z1, {0}, {2}))), WithinAbs(1.0, 1e-12));
  const auto f = laurent({{0, 3}, {1, 1}, {-1, 1}});
  CHECK_THAT(sigma_min_estimate(compress(f, box_window(Z1, {0}, {2}))), WithinRel(3.0 - std::sqrt(2.0), 1e-8));
  CHECK(sigma_min_estimate(compress(IntegerElement(Z1), box_window(Z1, {0}, {1}))) == 0.0);
  // Non-normal: singular values of [[3,1],[0,3]] are (sqrt(37) -+ 1)/2.
  CHECK_THAT(sigma_min_estimate(compress(laurent({{0, 3}, {1, 1}}), box_window(Z1, {0}, {1}))),
             WithinRel((std::sqrt(37.0) - 1.0) / 2.0, 1e-8));
}

TEST_CASE("section sigma_min dominates the positive-gap bound", "[sections][property]") {
  gen::Rng r(23);
  for (const auto& G : {GroupDescriptor::lattice(1), GroupDescriptor::lattice(2), GroupDescriptor::heisenberg()}) {
    for (int t = 0; t < 6; ++t) {
      auto h = gen::dominant_element(r, G, 4, 2);
      // symmetrize: f = h + h* with dominant identity coefficient of the right sign
      auto f = h + adjoint(h);
      if (f.coefficient(identity(G)) < 0) f = negate(f);
      const auto cert = certify_invertible(f, CertificateMethod::positive_gap);
      REQUIRE(cert.certified);
      for (std::int64_t n = 1; n <= (G.family() == GroupFamily::heisenberg3 ? 2 : 6); ++n) {
        const double s = sigma_min_estimate(compress(f, folner_window(G, n)));
        CHECK(s >= cert.sigma_min_lower * (1 - 1e-8));
      }
    }
  }
}

TEST_CASE("largest singular value of a section is at most the l1 norm", "[sections][property]") {
  gen::Rng r(24);
  for (const auto& G : {GroupDescriptor::lattice(1), GroupDescriptor::lattice(2), GroupDescriptor::heisenberg(),
                        GroupDescriptor::cyclic_product({2, 3})}) {
    const auto F = std::make_shared<const FolnerWindow>(folner_window(G, G.family() == GroupFamily::heisenberg3 ? 1 : 3));
    for (int t = 0; t < 10; ++t) {
      const auto f = gen::integer_element(r, G, 6, 7, 3);
      const double top = largest_singular(compress(f, F).to_dense<double>());
      CHECK(top <= l1_norm(f).convert_to<double>() * (1 + 1e-12) + 1e-12);
    }
  }
}
