#include <algorithm>
#include <random>

#include "doctest.h"
#include "lattes_forge/polynomial.hpp"
#include "lattes_forge/sphere.hpp"

using namespace lattes_forge;

TEST_CASE("sphere points and charts") {
  SpherePoint z(Complex(3.0, -4.0));
  CHECK(std::abs(z.finite() - Complex(3.0, -4.0)) < 1e-15);
  CHECK(z.preferred_chart() == Chart::Inverted);
  CHECK(std::abs(z.coordinate(Chart::Inverted) - 1.0 / Complex(3.0, -4.0)) < 1e-16);
  CHECK(SpherePoint::infinity().is_infinity());
  CHECK(SpherePoint::from_chart(Chart::Inverted, 0.0).is_infinity());
  CHECK(SpherePoint(Complex(0.5)).preferred_chart() == Chart::Finite);
}

TEST_CASE("chordal distance") {
  CHECK(chordal_distance(Complex(0.0), SpherePoint::infinity()) == doctest::Approx(2.0));
  CHECK(chordal_distance(Complex(1.0), Complex(-1.0)) == doctest::Approx(2.0));
  CHECK(chordal_distance(Complex(1.0), SpherePoint::infinity()) == doctest::Approx(std::sqrt(2.0)));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    Complex a(n(rng), n(rng)), b(n(rng), n(rng)), c(n(rng), n(rng));
    double ab = chordal_distance(a, b);
    CHECK(ab == doctest::Approx(chordal_distance(b, a)));
    CHECK(ab <= chordal_distance(a, c) + chordal_distance(c, b) + 1e-14);
    // inversion z -> 1/z is an isometry
    CHECK(ab == doctest::Approx(chordal_distance(1.0 / a, 1.0 / b)).epsilon(1e-12));
    double expected = 2.0 * std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
    CHECK(ab == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("horner jets") {
  std::vector<Complex> c{1.0, -2.0, 0.0, 3.0};  // 1 - 2x + 3x^3
  Complex x(0.3, 0.7);
  PolyJet j = horner_jet(c, x);
  CHECK(std::abs(j.value - (1.0 - 2.0 * x + 3.0 * x * x * x)) < 1e-14);
  CHECK(std::abs(j.d1 - (-2.0 + 9.0 * x * x)) < 1e-14);
  CHECK(std::abs(j.d2 - 18.0 * x) < 1e-14);
  auto [v, d] = horner_with_derivative(c, x);
  CHECK(std::abs(v - j.value) < 1e-15);
  CHECK(std::abs(d - j.d1) < 1e-15);
  auto dc = derivative_coefficients(c);
  CHECK(dc.size() == 3);
  CHECK(std::abs(horner(dc, x) - j.d1) < 1e-14);
}

TEST_CASE("roots of a polynomial with known zeros") {
  std::vector<Complex> zeros{Complex(1.0, 2.0), Complex(-0.5), Complex(0.0, -3.0), Complex(2.0, 0.1)};
  std::vector<Complex> p{1.0};
  for (auto z : zeros) p = multiply(p, std::vector<Complex>{-z, 1.0});
  auto roots = polynomial_roots(p);
  REQUIRE(roots.size() == zeros.size());
  for (auto z : zeros) {
    double best = 1e300;
    for (auto r : roots) best = std::min(best, std::abs(r - z));
    CHECK(best < 1e-12);
  }
}

TEST_CASE("homogeneous roots include infinity and multiplicities") {
  // Z^2 W (Z - W)^0 ... form c0 W^3 + c1 Z W^2 + c2 Z^2 W + c3 Z^3 = Z^2 W.
  std::vector<Complex> c{0.0, 0.0, 1.0, 0.0};
  auto roots = homogeneous_roots(c, 1e-6);
  int total = 0;
  bool zero = false, inf = false;
  for (const auto& r : roots) {
    total += r.multiplicity;
    if (!r.point.is_infinity() && std::abs(r.point.finite()) < 1e-6) zero = r.multiplicity == 2;
    if (r.point.is_infinity()) inf = r.multiplicity == 1;
  }
  CHECK(total == 3);
  CHECK(zero);
  CHECK(inf);
}
