#include <catch_amalgamated.hpp>

#include <cmath>

#include "fkdet/fk.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/perturbed.hpp"
#include "fkdet/snf.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace fkdet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GroupDescriptor Z1 = GroupDescriptor::lattice(1);
const double kMahler = oracle::mahler_3_plus_u_plus_uinv();

IntegerElement laurent(std::initializer_list<std::pair<std::int64_t, std::int64_t>> terms) {
  std::vector<IntegerElement::Term> t;
  for (auto [k, c] : terms) t.emplace_back(GroupElement{k}, Integer(c));
  return IntegerElement::from_terms(Z1, std::move(t));
}

IntegerElement three_u() { return laurent({{0, 3}, {1, 1}, {-1, 1}}); }

std::vector<std::shared_ptr<const FolnerWindow>> windows(const GroupDescriptor& G, std::vector<std::int64_t> ns) {
  std::vector<std::shared_ptr<const FolnerWindow>> out;
  for (auto n : ns) out.push_back(std::make_shared<const FolnerWindow>(folner_window(G, n)));
  return out;
}

std::shared_ptr<const FolnerWindow> zbox(std::int64_t lo, std::int64_t hi) {
  return std::make_shared<const FolnerWindow>(box_window(Z1, {lo}, {hi}));
}

IntMatrix to_int(const Eigen::MatrixXd& A) {
  IntMatrix M(static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      M(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = Integer(static_cast<long long>(A(i, j)));
  return M;
}

}  // namespace

TEST_CASE("logabsdet examples", "[det]") {
  CHECK(logabsdet(Eigen::MatrixXd::Identity(5, 5)) == 0.0);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 2;
  D(1, 1) = 3;
  CHECK_THAT(logabsdet(D), WithinAbs(std::log(6.0), 1e-14));
  Eigen::MatrixXd T(3, 3);
  T << 3, 1, 0, 1, 3, 1, 0, 1, 3;
  CHECK_THAT(logabsdet(T), WithinAbs(std::log(21.0), 1e-14));
  Eigen::SparseMatrix<double> Ts = T.sparseView();
  CHECK_THAT(logabsdet(Ts), WithinAbs(std::log(21.0), 1e-14));
  CHECK_THAT(logabsdet(compress(three_u(), *zbox(0, 2))), WithinAbs(std::log(21.0), 1e-14));

  CHECK(logabsdet(Eigen::MatrixXd::Zero(3, 3)) == -std::numeric_limits<double>::infinity());
  Eigen::MatrixXd S(2, 2);
  S << 1, 2, 2, 4;
  CHECK(std::isinf(logabsdet(S)));
  CHECK_THROWS_AS(logabsdet(Eigen::MatrixXd::Zero(2, 3)), DomainError);

  Eigen::MatrixXcd C(2, 2);
  C << Complex(1, 1), Complex(0, 0), Complex(2, 0), Complex(0, 3);
  CHECK_THAT(logabsdet(C), WithinAbs(std::log(3.0 * std::sqrt(2.0)), 1e-14));
}

TEST_CASE("logabsdet large banded section does not overflow", "[det]") {
  const auto M = compress(three_u(), *zbox(0, 4999));
  const double v = logabsdet(M) / 5000.0;
  CHECK(std::isfinite(v));
  CHECK_THAT(v, WithinAbs(kMahler, 1e-3));
}

TEST_CASE("logabsdet of M and its adjoint agree bitwise", "[det][property]") {
  gen::Rng r(31);
  for (int t = 0; t < 40; ++t) {
    const auto n = static_cast<Eigen::Index>(r.range(1, 8));
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) A(i, j) = static_cast<double>(r.range(-5, 5));
    CHECK(logabsdet(A) == logabsdet(Eigen::MatrixXd(A.transpose())));
    const double ref = std::log(std::abs(oracle::cofactor_det(to_int(A)).convert_to<double>()));
    if (std::isfinite(ref)) CHECK_THAT(logabsdet(A), WithinAbs(ref, 1e-9));
  }
}

TEST_CASE("snf examples", "[det]") {
  const auto a = snf(IntMatrix{{2, 0}, {0, 3}});
  CHECK(a.divisors == std::vector<Integer>{1, 6});
  CHECK(*quotient_order(a) == 6);
  const auto b = snf(IntMatrix::identity(4));
  CHECK(b.divisors == std::vector<Integer>(4, 1));
  CHECK(*quotient_order(b) == 1);
  const auto c = snf(IntMatrix{{2, 1}, {0, 3}});
  CHECK(c.divisors == std::vector<Integer>{1, 6});

  SnfResult z;
  z.rows = z.cols = 2;
  z.divisors = {1, 0};
  CHECK_FALSE(quotient_order(z).has_value());
  CHECK_FALSE(quotient_order(snf(IntMatrix{{1, 2}, {2, 4}})).has_value());
  CHECK(snf(IntMatrix{{0, 0}, {0, 0}}).divisors == std::vector<Integer>{0, 0});
}

TEST_CASE("snf chain, transforms and determinant", "[det][property]") {
  gen::Rng r(32);
  for (int t = 0; t < 120; ++t) {
    const auto n = static_cast<std::size_t>(r.range(1, 8));
    const auto m = static_cast<std::size_t>(r.range(1, 8));
    const auto M = gen::int_matrix(r, n, m, -9, 9);
    const auto res = snf(M, true);
    REQUIRE(res.divisors.size() == std::min(n, m));
    for (std::size_t i = 0; i < res.divisors.size(); ++i) {
      CHECK(res.divisors[i] >= 0);
      if (i + 1 < res.divisors.size()) {
        if (res.divisors[i] == 0)
          CHECK(res.divisors[i + 1] == 0);
        else
          CHECK(res.divisors[i + 1] % res.divisors[i] == 0);
      }
    }
    CHECK(*res.U * res.diagonal() * *res.V == M);
    CHECK(*res.V * *res.Vinv == IntMatrix::identity(m));
    CHECK(abs(bareiss_determinant(*res.U)) == 1);
    CHECK(abs(bareiss_determinant(*res.V)) == 1);
    if (n == m) {
      Integer prod = 1;
      for (const auto& d : res.divisors) prod *= d;
      CHECK(prod == abs(bareiss_determinant(M)));
      if (n <= 6) CHECK(prod == abs(oracle::cofactor_det(M)));
    }
  }
}

TEST_CASE("quotient order matches coset enumeration on 3x3 matrices", "[det][property]") {
  gen::Rng r(33);
  int done = 0;
  while (done < 60) {
    const auto M = gen::int_matrix(r, 3, 3, -3, 3);
    const auto det = oracle::cofactor_det(M);
    if (det == 0 || abs(det) > 60) continue;
    ++done;
    CHECK(*quotient_order(snf(M)) == oracle::coset_count3(M));
  }
}

TEST_CASE("snf survives entry blowup", "[det]") {
  gen::Rng r(34);
  const auto M = gen::int_matrix(r, 12, 12, -1000000, 1000000);
  const auto res = snf(M);
  Integer prod = 1;
  for (const auto& d : res.divisors) prod *= d;
  CHECK(prod == abs(bareiss_determinant(M)));
}

TEST_CASE("fk_finite_sections examples", "[det]") {
  auto t = fk_finite_sections(three_u(), {zbox(0, 2)});
  REQUIRE(t.rows.size() == 1);
  CHECK_THAT(t.rows[0].value, WithinAbs(std::log(21.0) / 3.0, 1e-14));
  CHECK_THAT(t.rows[0].value, WithinAbs(1.0148408, 1e-7));
  CHECK(t.rows[0].boundary_ratio == Rational(2, 3));
  CHECK(t.rows[0].method == "sections");

  const auto H = GroupDescriptor::heisenberg();
  t = fk_finite_sections(IntegerElement::identity(H, Integer(2)), windows(H, {1, 2, 3}));
  for (const auto& row : t.rows) CHECK_THAT(row.value, WithinRel(std::log(2.0), 1e-13));

  t = fk_finite_sections(three_u(), windows(Z1, {10, 100, 500}));
  CHECK(t.rows.back().window_size == 1001);
  CHECK(t.rows.back().n == 500);
  CHECK_THAT(t.rows.back().value, WithinAbs(kMahler, 1e-2));
  CHECK(std::abs(t.rows[2].value - kMahler) < std::abs(t.rows[0].value - kMahler));

  t = fk_finite_sections(three_u(), {zbox(0, 999)});
  CHECK_THAT(t.rows[0].value, WithinAbs(kMahler, 1e-2));
  CHECK(t.to_csv().rfind("n,window_size,boundary_ratio,value,method\n", 0) == 0);

  CHECK_THROWS_AS(fk_finite_sections(three_u(), {zbox(0, 5), zbox(0, 3)}), DomainError);
}

TEST_CASE("singular sections are defect rows", "[det]") {
  // u + u^-1 on an odd window is singular.
  const auto t = fk_finite_sections(laurent({{1, 1}, {-1, 1}}), {zbox(0, 2), zbox(0, 3), zbox(0, 4)});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].defect());
  CHECK_FALSE(t.rows[1].defect());
  CHECK(t.rows[2].defect());
  CHECK(t.to_csv().find("-inf") != std::string::npos);
}

TEST_CASE("sections for f and its adjoint agree exactly", "[det][property]") {
  gen::Rng r(35);
  for (const auto& G : {GroupDescriptor::lattice(1), GroupDescriptor::lattice(2), GroupDescriptor::heisenberg()}) {
    for (int t = 0; t < 6; ++t) {
      const auto f = gen::integer_element(r, G, 5, 5, 2);
      const auto sched = windows(G, {1, 2});
      const auto a = fk_finite_sections(f, sched), b = fk_finite_sections(adjoint(f), sched);
      for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].value == b.rows[i].value);
    }
  }
}

TEST_CASE("fk_poly_trace examples", "[det]") {
  const auto p = fk_poly_trace(IntegerElement::identity(Z1, Integer(2)), Rational(4), Rational(4), 7);
  CHECK(p.value == 0.5 * std::log(4.0));
  CHECK(p.error_bound == 0.0);

  const auto q = fk_poly_trace(three_u(), Rational(1), Rational(25), 40);
  CHECK(q.error_bound > 0.0);
  CHECK(q.error_bound < 5e-2);
  CHECK(std::abs(q.value - kMahler) <= q.error_bound);

  CHECK_THROWS_AS(fk_poly_trace(three_u(), Rational(0), Rational(25), 40), DomainError);
  CHECK_THROWS_AS(fk_poly_trace(three_u(), Rational(-1), Rational(25), 40), DomainError);
}

TEST_CASE("poly trace exact and float paths agree", "[det]") {
  const auto f = three_u();
  const auto e = fk_poly_trace(f, Rational(1, 2), Rational(26), 30);
  const auto c = fk_poly_trace(to_complex(f), Rational(1, 2), Rational(26), 30);
  CHECK_THAT(c.value, WithinAbs(e.value, 1e-9));
  const auto h = fk_poly_trace(to_rational(f), Rational(1, 2), Rational(26), 30);
  CHECK(h.value == e.value);
}

TEST_CASE("poly trace reruns agree within the combined bounds", "[det][property]") {
  gen::Rng r(36);
  for (const auto& G : {GroupDescriptor::lattice(1), GroupDescriptor::lattice(2), GroupDescriptor::heisenberg()}) {
    for (int t = 0; t < 3; ++t) {
      const auto f = gen::dominant_element(r, G, 3, 1);
      const auto cert = certify_invertible(f, CertificateMethod::l1_neumann);
      REQUIRE(cert.certified);
      const auto [a, b] = poly_trace_interval(f, cert);
      CHECK(a > 0);
      CHECK(a <= Rational(cert.sigma_min_lower) * Rational(cert.sigma_min_lower));
      CHECK(b >= Rational(l1_norm(f)) * Rational(l1_norm(f)));
      const auto lo = fk_poly_trace(f, a, b, 12), hi = fk_poly_trace(f, a, b, 20);
      CHECK(std::abs(lo.value - hi.value) <= lo.error_bound + hi.error_bound);
    }
  }
}

TEST_CASE("poly trace agrees with long finite sections", "[det][property]") {
  gen::Rng r(37);
  for (int t = 0; t < 6; ++t) {
    const auto f = gen::dominant_element(r, Z1, 4, 3);
    const auto cert = certify_invertible(f, CertificateMethod::torus_min, {512});
    REQUIRE(cert.certified);
    const auto [a, b] = poly_trace_interval(f, cert);
    const auto p = fk_poly_trace(f, a, b, 40);
    const double sec = fk_finite_sections(f, {zbox(0, 3999)}).rows[0].value;
    CHECK(std::abs(p.value - sec) <= p.error_bound + 5e-3);
  }
}

TEST_CASE("perturbation_study", "[det]") {
  const auto f = three_u();
  const auto sched = windows(Z1, {50, 200});
  const auto base = fk_finite_sections(f, sched);
  const auto zero = perturbation_study(f, sched, 0.0, 17);
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    CHECK(zero.rows[i].value == base.rows[i].value);
    CHECK(zero.rows[i].n == base.rows[i].n);
    CHECK(zero.rows[i].boundary_ratio == base.rows[i].boundary_ratio);
  }

  const auto big = std::vector{zbox(0, 999)};
  const auto s1 = perturbation_study(f, big, 0.02, 1), s2 = perturbation_study(f, big, 0.02, 2);
  CHECK_THAT(s1.rows[0].value, WithinAbs(kMahler, 2e-2));
  CHECK_THAT(s2.rows[0].value, WithinAbs(kMahler, 2e-2));
  CHECK(std::abs(s1.rows[0].value - s2.rows[0].value) <= 4e-2);
  CHECK(s1.rows[0].value != s2.rows[0].value);
  CHECK(perturbation_study(f, big, 0.02, 1).rows[0].value == s1.rows[0].value);

  CHECK_THROWS_AS(perturbation_study(f, big, 0.2, 1), DomainError);
  CHECK_THROWS_AS(perturbation_study(f, big, -0.01, 1), DomainError);
}

TEST_CASE("sample_indices draws distinct sorted positions", "[det][property]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto idx = detail::sample_indices(100, 10, seed);
    REQUIRE(idx.size() == 10);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.back() < 100);
    CHECK(detail::sample_indices(100, 10, seed) == idx);
  }
}

TEST_CASE("perturbed compression examples", "[det]") {
  const auto f = three_u();
  const auto F = zbox(0, 9);
  const std::vector<FolnerWindow> tiles{box_window(Z1, {0}, {4})};
  const auto P = build_perturbed_compression(f, F, tiles, 0.8);
  REQUIRE(P.transfers.size() == 1);
  CHECK(P.transfers[0].interior == std::vector<GroupElement>{{1}, {2}, {3}});
  CHECK(P.transfers[0].complement == std::vector<GroupElement>{{0}, {4}});
  CHECK(P.tiling.placements.size() == 2);
  CHECK(P.tiling.coverage == 1);
  CHECK(P.interior_size == 6);
  CHECK(P.rank_defect <= 4);
  CHECK(std::isfinite(P.logabsdet()));

  const auto e = build_perturbed_compression(IntegerElement::identity(Z1), F, tiles, 0.1);
  CHECK(P.denominator >= 1);
  CHECK(e.rank_defect == 0);
  CHECK_THAT(e.logabsdet(), WithinAbs(0.0, 1e-14));

  CHECK_THROWS_AS(build_perturbed_compression(f, F, tiles, 0.5), PreconditionError);
}

TEST_CASE("perturbed compression invariants", "[det][property]") {
  gen::Rng r(38);
  const auto Z2 = GroupDescriptor::lattice(2);
  for (int t = 0; t < 4; ++t) {
    const auto f = gen::dominant_element(r, Z2, 4, 1);
    const auto F = std::make_shared<const FolnerWindow>(box_window(Z2, {0, 0}, {13, 13}));
    const std::vector<FolnerWindow> tiles{box_window(Z2, {0, 0}, {6, 6}), box_window(Z2, {0, 0}, {2, 2})};
    const auto P = build_perturbed_compression(f, F, tiles, 1.8);
    const auto chk = verify_tiling(P.tiling);
    CHECK(chk.contained);
    CHECK(chk.disjoint_ok);
    CHECK(P.rank_defect <= F->size() - P.interior_size);
    CHECK(std::isfinite(P.logabsdet()));
    Integer prod = 1;
    for (const auto& p : P.tiling.placements) prod *= P.transfers[p.tile].denominator;
    CHECK(P.denominator == prod);
    for (const auto& T : P.transfers) {
      CHECK(T.norm <= 2.0);
      CHECK(T.inverse_norm <= 2.0);
      if (T.complement.empty()) continue;
      // M_j·T̃ maps integer vectors to integer vectors; the numerators are that map.
      const auto k = T.complement.size();
      for (int v = 0; v < 5; ++v) {
        std::vector<Integer> x(k);
        for (auto& xi : x) xi = r.range(-5, 5);
        for (std::size_t i = 0; i < T.numerators.rows(); ++i) {
          Rational s = 0;
          for (std::size_t j = 0; j < k; ++j) s += Rational(T.numerators(i, j), T.denominator) * x[j];
          CHECK(boost::multiprecision::denominator(Rational(s * T.denominator)) == 1);
        }
      }
      // range of T̃ is orthogonal to f·C[W']
      const auto& W = tiles[&T - P.transfers.data()];
      for (const auto& g : T.interior) {
        std::vector<Integer> col(W.size(), Integer(0));
        for (const auto& [s, x] : f.terms()) col[*W.position(multiply(Z2, s, g))] += x;
        for (std::size_t j = 0; j < k; ++j) {
          Integer dot = 0;
          for (std::size_t i = 0; i < W.size(); ++i) dot += col[i] * T.numerators(i, j);
          CHECK(dot == 0);
        }
      }
    }
    // S agrees with f_F on interior columns
    const auto fF = compress(f, F).to_dense<double>();
    const Eigen::MatrixXd S(P.matrix);
    std::size_t same = 0;
    for (Eigen::Index j = 0; j < S.cols(); ++j)
      if (S.col(j) == fF.col(j)) ++same;
    CHECK(same >= P.interior_size);
  }
}

TEST_CASE("perturbed determinant tracks the finite sections", "[det]") {
  const auto f = three_u();
  const auto F = zbox(0, 1999);
  const std::vector<FolnerWindow> tiles{box_window(Z1, {0}, {99}), box_window(Z1, {0}, {9})};
  const auto P = build_perturbed_compression(f, F, tiles, 0.5);
  CHECK_THAT(P.logabsdet() / 2000.0, WithinAbs(kMahler, 2e-2));
}
