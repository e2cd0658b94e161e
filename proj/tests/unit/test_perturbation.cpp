#include "doctest.h"
#include "lattes_forge/dynamics.hpp"
#include "lattes_forge/lattes.hpp"
#include "lattes_forge/perturbation.hpp"

using namespace lattes_forge;
using namespace lattes_forge::perturbation;
using elliptic::RationalTorusPoint;
using elliptic::TorusParameter;
using lattes::LattesInstance;
using lattes::LattesSpec;

namespace {

const Complex kGamma0(1.0 / 3.0, 1.0);

LattesSpec make(Complex gamma, int a, int tag) { return LattesSpec(TorusParameter(gamma), a, lattes::case_from_int(tag)); }

const LattesInstance& base_instance() {
  static const LattesInstance inst = LattesInstance::build(make(kGamma0, 2, 1));
  return inst;
}

RationalPair standard() { return standard_parameters(Rational(1, 3), Rational(1), 2); }

MarkOptions degenerate_ok() {
  MarkOptions o;
  o.allow_degenerate = true;
  return o;
}

}  // namespace

TEST_CASE("standard parameters") {
  RationalPair p = standard();
  CHECK(p.alpha == Rational(-1, 3));
  CHECK(p.alpha_prime == Rational(1));
  CHECK(p.beta == Rational(1));
  CHECK(p.beta_prime == Rational(0));
  CHECK(std::abs(p.sigma(kGamma0) / p.tau(kGamma0) - Complex(0.0, 1.0)) < 1e-15);
  try {
    (void)standard_parameters(Rational(1, 3), Rational(1), 3);
    FAIL("coprimality not checked");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CoprimalityViolation);
    CHECK(std::string(e.what()).find("denominator 3") != std::string::npos);
  }
  CHECK_NOTHROW(standard_parameters(Rational(1, 5), Rational(1), 3));
  CHECK_THROWS_AS(standard_parameters(Rational(1, 3), Rational(1, 4), 3), Error);
  CHECK_THROWS_AS(standard_parameters(Rational(1, 5), Rational(-1), 3), Error);
}

TEST_CASE("perturbed family") {
  PerturbedFamily fam{base_instance().spec, base_instance().map, 0.0};
  Complex t(1e-2, -3e-3), z(0.2, 0.7);
  Complex lhs = dynamics::eval(fam.member(t), z).finite();
  CHECK(std::abs(lhs - (1.0 + t) * dynamics::eval(base_instance().map, z).finite()) < 1e-13);
  CHECK_THROWS_AS(fam.member(-1.0), Error);
}

TEST_CASE("marked points follow their exact itineraries") {
  const auto& inst = base_instance();
  RationalPair p = standard();
  for (int k = 1; k <= 5; ++k) {
    auto x = make_marked_point(inst, p, k, Family::X);
    CAPTURE(k);
    CHECK_FALSE(x.degenerate);
    CHECK(x.certificate.repelling);
    // f^k(x_k) = Theta(sigma)
    SpherePoint image = x.position;
    for (int i = 0; i < k; ++i) image = dynamics::eval(inst.map, image);
    elliptic::Theta theta(inst.spec.gamma());
    CHECK(chordal_distance(image, theta(RationalTorusPoint{p.alpha, p.alpha_prime})) < 1e-8);
    CHECK(chordal_distance(x.position, theta(x.torus_address)) < 1e-12);
  }
  // x_k -> v = 1
  double previous = 2.0;
  for (int k = 2; k <= 8; ++k) {
    double d = chordal_distance(make_marked_point(inst, p, k, Family::X).position, Complex(1.0));
    CHECK(d < previous);
    previous = d;
  }
}

TEST_CASE("odd-half case, k even: f^k(x_k) = Theta(1/2 + sigma)") {
  auto inst = LattesInstance::build(make(Complex(1.0 / 5.0, 1.0), 3, 3));
  RationalPair p = standard_parameters(Rational(1, 5), Rational(1), 3);
  elliptic::Theta theta(inst.spec.gamma());
  for (int k : {2, 4}) {
    auto x = make_marked_point(inst, p, k, Family::X);
    SpherePoint image = x.position;
    for (int i = 0; i < k; ++i) image = dynamics::eval(inst.map, image);
    CHECK(chordal_distance(image, theta(RationalTorusPoint{Rational(1, 2) + p.alpha, p.alpha_prime})) < 1e-8);
  }
}

TEST_CASE("the Y family with y0 = 1 passes through a critical point") {
  const auto& inst = base_instance();
  try {
    (void)make_marked_point(inst, standard(), 3, Family::Y);
    FAIL("degenerate orbit accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PostcriticalCollision);
  }
  auto y = make_marked_point(inst, standard(), 3, Family::Y, degenerate_ok());
  CHECK(y.degenerate);
  CHECK(y.critical_steps.size() == 1);
}

TEST_CASE("tracking: identity at t = 0, equivariance and the fixed point 0") {
  const auto& inst = base_instance();
  PerturbedFamily fam{inst.spec, inst.map, 0.0};
  auto x = make_marked_point(inst, standard(), 4, Family::X);
  TrackResult r0 = track_marked_point(fam, x, 0.0);
  CHECK(r0.point.hz() == x.position.hz());
  CHECK(r0.point.hw() == x.position.hw());

  for (Complex t : {Complex(1e-3), Complex(-2e-3, 1e-3), Complex(0.0, 5e-3)}) {
    TrackResult r = track_marked_point(fam, x, t);
    CHECK(r.conjugacy_residual < 1e-8);
    auto g = fam.member(t);
    for (std::size_t i = 0; i + 1 < r.chain.size(); ++i)
      CHECK(chordal_distance(dynamics::eval(g, r.chain[i]), r.chain[i + 1]) < 1e-8);
    CHECK(chordal_distance(r.point, x.position) < 0.1);
  }

  auto zero = mark_torus_point(inst, {Rational(0), Rational(0)}, degenerate_ok());
  TrackResult r = track_marked_point(fam, zero, Complex(1e-2, 1e-2));
  CHECK(std::abs(r.point.finite()) < 1e-14);
}

TEST_CASE("case constants from tracked derivatives") {
  for (Complex gamma : {Complex(0.0, 1.0), kGamma0})
    for (auto [a, tag] : {std::pair{2, 1}, {3, 2}, {3, 3}}) {
      auto inst = LattesInstance::build(make(gamma, a, tag));
      Lemma3Report r = verify_lemma3(inst);
      CAPTURE(a);
      CAPTURE(tag);
      CHECK(std::abs(r.c_measured - r.c_expected) < 1e-6);
      CHECK(r.residual < 1e-6);
      // -(x' - v')/lambda = (y' - w')/mu
      Complex lhs = -(r.limits.x_dot - r.limits.v_dot) / inst.theta.lambda;
      Complex rhs = (r.limits.y_dot - r.limits.w_dot) / inst.theta.mu;
      CHECK(std::abs(lhs - rhs) < 1e-6);
    }
  CHECK(case_constant(make(kGamma0, 3, 2)) == doctest::Approx(-1.125));
  CHECK(case_constant(make(kGamma0, 3, 3)) == doctest::Approx(-0.9));
  auto odd = tracked_limits(make(kGamma0, 3, 2));
  CHECK(std::abs(odd.x_dot + 1.0 / 8.0) < 1e-6);
  auto half = tracked_limits(make(kGamma0, 3, 3));
  CHECK(std::abs(half.x_dot - 0.1) < 1e-6);
  CHECK(std::abs(tracked_limits(make(kGamma0, 2, 1)).x_dot) < 1e-6);
  CHECK_THROWS_AS(tracked_limits(make(kGamma0, 2, 1), 1e-2), Error);
}

TEST_CASE("rescaled collision function") {
  const auto& inst = base_instance();
  RationalPair p = standard();
  const Complex sigma = p.sigma(kGamma0);
  const Complex limit = inst.theta.lambda * sigma * sigma;
  double previous = 1e300;
  for (int k = 3; k <= 8; ++k) {
    auto x = make_marked_point(inst, p, k, Family::X);
    double d = std::abs(rescaled_collision_fn(inst, x, 0.0) - limit);
    CHECK(d < previous);
    previous = d;
  }
  // The slope in u approaches x' - v' = c v.
  auto x = make_marked_point(inst, p, 10, Family::X);
  Complex f0 = rescaled_collision_fn(inst, x, 0.0), f1 = rescaled_collision_fn(inst, x, 1.0);
  CHECK(std::abs((f1 - f0) - case_constant(inst.spec) * inst.theta.v) < 1e-4);
}

TEST_CASE("collision solves") {
  const auto& inst = base_instance();
  auto x = make_marked_point(inst, standard(), 3, Family::X);
  CollisionResult s = solve_collision(inst, x);
  CollisionResult naive = solve_collision_naive(inst, x);
  CHECK(std::abs(s.value - naive.value) < 1e-10);
  CHECK(std::abs(s.rescaled - 64.0 * s.value) < 1e-12 * std::abs(s.rescaled));
  PerturbedFamily fam{inst.spec, inst.map, 0.0};
  SpherePoint moved = track_marked_point(fam, x, s.value).point;
  CHECK(chordal_distance(moved, (1.0 + s.value) * inst.theta.v) < 1e-9);

  auto y = make_marked_point(inst, standard(), 3, Family::Y, degenerate_ok());
  CollisionResult t = solve_collision(inst, y);
  SpherePoint moved_y = track_marked_point(fam, y, t.value).point;
  CHECK(chordal_distance(moved_y, (1.0 + t.value) * inst.theta.w) < 1e-9);
  CHECK(t.branch_hints.size() == 1);
}

TEST_CASE("precision ceiling") {
  CHECK_NOTHROW(require_feasible(2, 13));
  CHECK_THROWS_AS(require_feasible(2, 14), Error);
  CHECK_NOTHROW(require_feasible(3, 8));
  try {
    require_feasible(3, 9);
    FAIL("ceiling not enforced");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PrecisionExhausted);
  }
}

TEST_CASE("certification of Lattes maps and of generic perturbations") {
  const auto& inst = base_instance();
  CertifyReport f = certify_strictly_pcf(inst.map, critical_value_set(inst.map));
  CHECK(f.postcritical_count == 4);
  CHECK(f.lattes_witness);
  CHECK_FALSE(f.non_lattes_witness);
  for (const auto& c : f.certificates) CHECK(c.repelling);

  auto g = inst.map.scaled(1.0 + 1e-3);
  try {
    (void)certify_strictly_pcf(g, critical_value_set(g));
    FAIL("generic perturbation certified");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPCF);
  }

  RationalMapCoeffs quad({1.0, 0.0, 1.0}, {1.0, 0.0, 0.0});  // z^2 + 1
  CHECK_THROWS_AS(certify_strictly_pcf(quad, critical_value_set(quad)), Error);
  RationalMapCoeffs sq({0.0, 0.0, 1.0}, {1.0, 0.0, 0.0});  // z^2: superattracting
  try {
    (void)certify_strictly_pcf(sq, critical_value_set(sq));
    FAIL("attracting cycle certified");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotRepelling);
  }
}

TEST_CASE("construction at k = 3 and 4") {
  double previous = 1e300;
  for (int k : {3, 4}) {
    ConstructionResult r = solve_gamma_k(base_instance().spec, standard(), k);
    CAPTURE(k);
    CHECK(r.ratio_residual < 1e-10);
    CHECK(r.g_k.degree() == 4);
    CHECK(r.collision_gap < 1e-9);
    CHECK(r.certificate.postcritical_count > 4);
    CHECK(r.certificate.non_lattes_witness);
    for (const auto& c : r.certificate.certificates) {
      CHECK(c.repelling);
      CHECK(c.landing_residual < 1e-8);
    }
    CHECK(std::abs(r.gamma_k - kGamma0) < previous);
    previous = std::abs(r.gamma_k - kGamma0);
  }
}

TEST_CASE("convergence table bookkeeping") {
  ConvergenceTable t = convergence_table(base_instance().spec, standard(), 1, 14, {}, false, 2);
  REQUIRE(t.rows.size() == 14);
  for (const auto& row : t.rows) {
    CAPTURE(row.k);
    if (row.k < 3) CHECK_FALSE(row.converging);
    if (row.k == 14) {
      CHECK_FALSE(row.ok);
      REQUIRE(row.error_code.has_value());
      CHECK(*row.error_code == ErrorCode::PrecisionExhausted);
    }
  }
  CHECK_FALSE(t.monotone);  // the precision row is part of the range
  ConvergenceTable t36 = convergence_table(base_instance().spec, standard(), 3, 6, {}, false, 4);
  CHECK(t36.monotone);
  for (std::size_t i = 1; i < t36.rows.size(); ++i) CHECK(t36.rows[i].converging);
}
