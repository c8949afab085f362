#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "domcert/matgeo.hpp"
#include "support.hpp"

using namespace domcert;
using namespace domcert::matgeo;
using testsupport::random_invertible;
using testsupport::random_orthogonal;
using testsupport::random_subspace;
using testsupport::rotation2;

TEST_CASE("svd basics") {
  SUBCASE("identity") {
    auto t = svd(Matrix::Identity(3, 3));
    for (int i = 0; i < 3; ++i) CHECK(t.sigmas[i] == doctest::Approx(1.0));
  }
  SUBCASE("diagonal") {
    Matrix A = Vector::LinSpaced(2, 3, 1).asDiagonal();  // diag(3,1)
    auto t = svd(A);
    CHECK(t.sigmas[0] == doctest::Approx(3.0));
    CHECK(t.sigmas[1] == doctest::Approx(1.0));
    CHECK((t.left - Matrix::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("antidiagonal, values by hand from A*A^T = diag(4,1)") {
    Matrix A(2, 2);
    A << 0, 2, 1, 0;
    auto t = svd(A);
    CHECK(t.sigmas[0] == doctest::Approx(2.0));
    CHECK(t.sigmas[1] == doctest::Approx(1.0));
  }
  SUBCASE("reconstruction and frames on random input") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 200; ++it) {
      const int d = 2 + static_cast<int>(rng() % 7);
      Matrix A = random_invertible(rng, d);
      auto t = svd(A);
      Matrix R = t.left * t.sigmas.asDiagonal() * t.right.transpose();
      CHECK((R - A).norm() <= 1e-10 * t.sigmas[0]);
      CHECK((t.left.transpose() * t.left - Matrix::Identity(d, d)).norm() < 1e-12);
      CHECK((t.right.transpose() * t.right - Matrix::Identity(d, d)).norm() < 1e-12);
      for (int i = 0; i + 1 < d; ++i) CHECK(t.sigmas[i] >= t.sigmas[i + 1]);
      // cross-check against an independent eigensolver on A^T A
      Eigen::SelfAdjointEigenSolver<Matrix> es(A.transpose() * A);
      for (int i = 0; i < d; ++i) {
        CHECK(t.sigmas[i] ==
              doctest::Approx(std::sqrt(es.eigenvalues()[d - 1 - i])).epsilon(1e-9));
      }
    }
  }
  SUBCASE("determinism incl. sign convention") {
    std::mt19937_64 rng(7);
    Matrix A = random_invertible(rng, 5);
    auto t1 = svd(A);
    auto t2 = svd(A);
    CHECK((t1.left - t2.left).norm() == 0.0);
    CHECK((t1.right - t2.right).norm() == 0.0);
    for (int k = 0; k < 5; ++k) {
      for (int i = 0; i < 5; ++i) {
        if (std::abs(t1.left(i, k)) > 1e-9 * t1.left.col(k).cwiseAbs().maxCoeff()) {
          CHECK(t1.left(i, k) > 0);
          break;
        }
      }
    }
  }
  SUBCASE("non-invertible rejected") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    A(1, 1) = 1e-14;
    CHECK_THROWS_AS(svd(A), Error);
  }
}

TEST_CASE("gap_ratio") {
  CHECK(gap_ratio(rotation2(M_PI / 2), 1) == doctest::Approx(1.0));
  Matrix A = Matrix::Zero(3, 3);
  A.diagonal() << 4, 2, 1;
  CHECK(gap_ratio(A, 2) == doctest::Approx(0.5));
  // D^-1 R D with D = diag(2, 1/2), det = 1 so ratio = 1/sigma_1^2
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 2.0, 0.5;
  Matrix M = D.inverse() * rotation2(M_PI / 3) * D;
  auto t = svd(M);
  double r = gap_ratio(M, 1);
  CHECK(r == doctest::Approx(1.0 / (t.sigmas[0] * t.sigmas[0])));
  CHECK(r > 0.0);
  CHECK(r < 1.0);
}

TEST_CASE("singular_spaces") {
  SUBCASE("diagonal") {
    Matrix A = Matrix::Zero(2, 2);
    A.diagonal() << 3, 1;
    auto [U, S] = singular_spaces(A, 1);
    CHECK(grassmann_distance(U, Subspace::coordinate(2, {0})) < 1e-12);
    CHECK(grassmann_distance(S, Subspace::coordinate(2, {1})) < 1e-12);
  }
  SUBCASE("antidiagonal: both spaces from the axes of A A^T and A^-1 A^-T") {
    Matrix A(2, 2);
    A << 0, 2, 1, 0;
    auto [U, S] = singular_spaces(A, 1);
    CHECK(grassmann_distance(U, Subspace::coordinate(2, {0})) < 1e-12);
    CHECK(grassmann_distance(S, Subspace::coordinate(2, {0})) < 1e-12);
  }
  SUBCASE("rotation has no gap") {
    CHECK_THROWS_AS(singular_spaces(rotation2(0.3), 1), Error);
  }
  SUBCASE("identities S^perp = A^-1(U) and U^perp = A(S)") {
    std::mt19937_64 rng(21);
    for (int it = 0; it < 100; ++it) {
      const int d = 2 + static_cast<int>(rng() % 5);
      const int p = 1 + static_cast<int>(rng() % (d - 1));
      Matrix A = random_invertible(rng, d);
      if (gap_ratio(A, p) >= 1.0 - 1e-6) continue;
      auto [U, S] = singular_spaces(A, p);
      CHECK(grassmann_distance(S.orthocomplement(), apply(A.inverse(), U)) < 1e-8);
      CHECK(grassmann_distance(U.orthocomplement(), apply(A, S)) < 1e-8);
    }
  }
}

TEST_CASE("grassmann distance and angles") {
  Subspace e1 = Subspace::coordinate(2, {0});
  Subspace e2 = Subspace::coordinate(2, {1});
  Matrix diagv(2, 1);
  diagv << 1, 1;
  Subspace diag2(diagv);

  CHECK(grassmann_distance(e1, e1) == doctest::Approx(0.0));
  CHECK(grassmann_distance(e1, e2) == doctest::Approx(1.0));
  CHECK(grassmann_distance(e1, diag2) == doctest::Approx(std::sin(M_PI / 4)));

  SUBCASE("angle") {
    Matrix Pq(3, 2);
    Pq << 1, 0, 1, 0, 0, 1;  // span(e1+e2, e3)
    Subspace Q(Pq);
    Subspace P = Subspace::coordinate(3, {0});
    CHECK(angle(P, Q) == doctest::Approx(M_PI / 4));
    CHECK(angle(Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1})) ==
          doctest::Approx(M_PI / 2));
    // P inside Q -> 0
    CHECK(angle(Subspace::coordinate(3, {2}), Q) == doctest::Approx(0.0));
  }

  SUBCASE("canonical angles") {
    Matrix Bq(3, 2);
    Bq << 1, 0, 0, 1, 0, 1;
    Subspace Q(Bq);  // span(e1, (e2+e3)/sqrt2)
    Subspace P = Subspace::coordinate(3, {0, 1});
    auto betas = canonical_angles(P, Q);
    CHECK(betas[0] == doctest::Approx(M_PI / 4));
    CHECK(betas[1] == doctest::Approx(0.0));
    auto same = canonical_angles(P, P);
    CHECK(same[0] == doctest::Approx(0.0));
    auto orth = canonical_angles(Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1}));
    CHECK(orth[0] == doctest::Approx(M_PI / 2));
  }

  SUBCASE("d = sin beta_1 and d = cos angle(P^perp, Q)") {
    std::mt19937_64 rng(33);
    for (int it = 0; it < 300; ++it) {
      const int d = 2 + static_cast<int>(rng() % 5);
      const int p = 1 + static_cast<int>(rng() % (d - 1));
      Subspace P = random_subspace(rng, d, p);
      Subspace Q = random_subspace(rng, d, p);
      const double dist = grassmann_distance(P, Q);
      CHECK(dist == doctest::Approx(std::sin(canonical_angles(P, Q)[0])).epsilon(1e-10));
      CHECK(dist ==
            doctest::Approx(std::cos(angle(P.orthocomplement(), Q))).epsilon(1e-10));
      CHECK(dist + 1e-12 >= std::sin(angle(P, Q)));
      // symmetry and triangle inequality
      CHECK(grassmann_distance(Q, P) == doctest::Approx(dist).epsilon(1e-12));
      Subspace R = random_subspace(rng, d, p);
      CHECK(dist <= grassmann_distance(P, R) + grassmann_distance(R, Q) + 1e-12);
    }
  }
}

TEST_CASE("graph_map_norm") {
  Subspace e1 = Subspace::coordinate(2, {0});
  CHECK(graph_map_norm(e1, e1) == doctest::Approx(0.0));
  Matrix v(2, 1);
  v << 2, 1;
  CHECK(graph_map_norm(e1, Subspace(v)) == doctest::Approx(0.5));
  Matrix w(2, 1);
  w << 1, 1;
  CHECK(graph_map_norm(e1, Subspace(w)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(graph_map_norm(e1, Subspace::coordinate(2, {1})), Error);
}

TEST_CASE("exterior powers") {
  SUBCASE("identity") {
    Matrix E = exterior_power(Matrix::Identity(4, 4), 2);
    CHECK((E - Matrix::Identity(6, 6)).norm() < 1e-14);
  }
  SUBCASE("diagonal") {
    Matrix A = Matrix::Zero(3, 3);
    A.diagonal() << 3, 2, 1;
    Matrix E = exterior_power(A, 2);
    Matrix expect = Matrix::Zero(3, 3);
    expect.diagonal() << 6, 3, 2;  // e1^e2, e1^e3, e2^e3
    CHECK((E - expect).norm() < 1e-13);
  }
  SUBCASE("multiplicativity and singular values") {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 60; ++it) {
      const int d = 3 + static_cast<int>(rng() % 3);
      const int p = 1 + static_cast<int>(rng() % (d - 1));
      Matrix A = random_invertible(rng, d);
      Matrix B = random_invertible(rng, d);
      Matrix lhs = exterior_power(A * B, p);
      Matrix rhs = exterior_power(A, p) * exterior_power(B, p);
      CHECK((lhs - rhs).norm() <= 1e-8 * rhs.norm());

      auto sa = svd(A).sigmas;
      auto se = singular_values(exterior_power(A, p));
      double s1 = 1.0, s2 = 1.0;
      for (int i = 0; i < p; ++i) s1 *= sa[i];
      for (int i = 0; i < p - 1; ++i) s2 *= sa[i];
      s2 *= sa[p];
      CHECK(se[0] == doctest::Approx(s1).epsilon(1e-8));
      if (se.size() > 1) CHECK(se[1] == doctest::Approx(s2).epsilon(1e-8));
    }
  }
}

TEST_CASE("plucker embedding") {
  SUBCASE("coordinate planes") {
    Vector w = plucker_embed(Subspace::coordinate(3, {0, 1}));
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(std::abs(w[1]) < 1e-14);
    CHECK(std::abs(w[2]) < 1e-14);
    Vector l = plucker_embed(Subspace::coordinate(2, {0}));
    CHECK(l[0] == doctest::Approx(1.0));
  }
  SUBCASE("bilinear expansion") {
    Matrix B(3, 2);
    B << 1, 0, 1, 0, 0, 1;  // span(e1+e2, e3)
    Vector w = plucker_embed(Subspace(B));
    CHECK(w[1] == doctest::Approx(1.0 / std::sqrt(2)));  // e1^e3
    CHECK(w[2] == doctest::Approx(1.0 / std::sqrt(2)));  // e2^e3
    CHECK(std::abs(w[0]) < 1e-14);
  }
  SUBCASE("distance bound d(iota P, iota Q) >= d(P, Q)") {
    std::mt19937_64 rng(17);
    for (int it = 0; it < 200; ++it) {
      const int d = 3 + static_cast<int>(rng() % 3);
      const int p = 1 + static_cast<int>(rng() % (d - 1));
      Subspace P = random_subspace(rng, d, p);
      Subspace Q = random_subspace(rng, d, p);
      Matrix bp = plucker_embed(P);
      Matrix bq = plucker_embed(Q);
      Subspace iP{bp}, iQ{bq};
      CHECK(grassmann_distance(iP, iQ) + 1e-10 >= grassmann_distance(P, Q));
    }
  }
}

TEST_CASE("restricted jacobian") {
  CHECK(restricted_jacobian(Matrix::Identity(3, 3), Subspace::coordinate(3, {0, 2})) ==
        doctest::Approx(1.0));
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 3, 2;
  CHECK(restricted_jacobian(A, Subspace::coordinate(2, {1})) == doctest::Approx(2.0));
  Matrix B = Matrix::Zero(3, 3);
  B.diagonal() << 3, 2, 1;
  CHECK(restricted_jacobian(B, Subspace::coordinate(3, {0, 2})) == doctest::Approx(3.0));
  // agrees with product of singular values of A|_P
  std::mt19937_64 rng(3);
  for (int it = 0; it < 50; ++it) {
    const int d = 3 + static_cast<int>(rng() % 3);
    const int p = 1 + static_cast<int>(rng() % (d - 1));
    Matrix A2 = random_invertible(rng, d);
    Subspace P = random_subspace(rng, d, p);
    Vector s = singular_values(A2 * P.basis());
    double prod = 1.0;
    for (int i = 0; i < s.size(); ++i) prod *= s[i];
    CHECK(restricted_jacobian(A2, P) == doctest::Approx(prod).epsilon(1e-9));
  }
}
