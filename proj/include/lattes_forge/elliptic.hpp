#pragma once

#include <functional>

#include "lattes_forge/core.hpp"
#include "lattes_forge/rational.hpp"
#include "lattes_forge/sphere.hpp"

namespace lattes_forge::elliptic {

// Generator of the lattice Z + gamma Z; Im(gamma) > 0.
class TorusParameter {
 public:
  explicit TorusParameter(Complex gamma);
  Complex value() const noexcept { return gamma_; }

 private:
  Complex gamma_;
};

// The torus point s + t*gamma in lattice coordinates.
struct TorusPoint {
  double s = 0.0;
  double t = 0.0;

  // Representative with 0 <= s, t < 1.
  TorusPoint reduced() const noexcept;
  Complex position(const TorusParameter& gamma) const noexcept { return s + t * gamma.value(); }
};

// Torus point with exact rational lattice coordinates.
struct RationalTorusPoint {
  Rational s;
  Rational t;

  RationalTorusPoint reduced() const { return {s.frac(), t.frac()}; }
  TorusPoint to_double() const noexcept { return {s.to_double(), t.to_double()}; }
  // 2p lies in the lattice.
  bool in_half_lattice() const noexcept;
  // Equal modulo the lattice, or equal up to sign: Theta(p) == Theta(q) exactly.
  bool same_theta_image(const RationalTorusPoint& other) const;

  friend RationalTorusPoint operator+(const RationalTorusPoint& a, const RationalTorusPoint& b) {
    return {a.s + b.s, a.t + b.t};
  }
  friend bool operator==(const RationalTorusPoint&, const RationalTorusPoint&) = default;
};

struct HalfPeriodValues {
  Complex e1;  // wp(1/2)
  Complex e2;  // wp((1 + gamma)/2)
  Complex e3;  // wp(gamma/2)
};

struct ThetaData {
  Complex gamma;
  Complex v{1.0};
  Complex w;
  Complex lambda;
  Complex mu;
  Complex kappa;
  double lemma1_residual = 0.0;  // |lambda/v + mu/w|
  double kappa_residual = 0.0;   // |4 lambda/(v(v-w)) - 4 mu/(w(w-v))|
};

inline constexpr int kMaxSeriesTerms = 20000;

// Weierstrass p for the lattice Z + gamma Z, by its nome expansion in
// q^2 = exp(2 pi i gamma) after reducing tau to |s|, |t| <= 1/2.
Complex weierstrass_p(TorusPoint tau, const TorusParameter& gamma, double tol = kDefaultTol);

HalfPeriodValues half_periods(const TorusParameter& gamma, double tol = kDefaultTol);

// Normalized degree-two quotient map of the torus: Theta(0) = 0,
// Theta((1 + gamma)/2) = infinity, Theta(1/2) = 1, via the Moebius map
// (e1 - e2)/(wp - e2).  Holds the half-period values so repeated
// evaluation costs one series.
class Theta {
 public:
  explicit Theta(const TorusParameter& gamma, double tol = kDefaultTol);

  SpherePoint operator()(TorusPoint tau) const;
  SpherePoint operator()(const RationalTorusPoint& tau) const { return (*this)(tau.to_double()); }

  // Theta(base + delta) - Theta(base) for finite values, with the wp
  // difference summed in product form so small offsets keep full precision.
  Complex difference(TorusPoint base, Complex delta) const;

  const TorusParameter& gamma() const noexcept { return gamma_; }
  const HalfPeriodValues& half_period_values() const noexcept { return e_; }
  double tol() const noexcept { return tol_; }
  // Theta(gamma/2).
  Complex w() const noexcept { return w_; }

 private:
  TorusParameter gamma_;
  double tol_;
  HalfPeriodValues e_;
  Complex w_;
};

SpherePoint theta_map(TorusPoint tau, const TorusParameter& gamma);

using ThetaFunction = std::function<SpherePoint(TorusPoint)>;

// Quadratic coefficients of Theta at 1/2 and gamma/2 and the pullback
// constant kappa.  Throws LemmaViolation if lambda/v + mu/w or the two kappa
// expressions disagree beyond 100 * tol.
ThetaData theta_data(const TorusParameter& gamma, double tol = kDefaultTol);
// Same checks with plain second differences of an arbitrary Theta; used to
// exercise the violation path with a deliberately broken map.
ThetaData theta_data(const ThetaFunction& theta, const TorusParameter& gamma, double tol = kDefaultTol);

}  // namespace lattes_forge::elliptic
