#pragma once

#include <iosfwd>

#include "lattes_forge/core.hpp"

namespace lattes_forge {

// Affine charts of the Riemann sphere: Finite uses z = Z/W, Inverted uses
// zeta = W/Z (so the point at infinity is zeta = 0).
enum class Chart { Finite, Inverted };

// Point (Z : W) of the Riemann sphere, stored with max(|Z|, |W|) = 1.
class SpherePoint {
 public:
  SpherePoint() = default;
  SpherePoint(Complex z);  // NOLINT: finite points convert implicitly
  SpherePoint(Complex Z, Complex W);

  static SpherePoint infinity() { return SpherePoint(Complex(1.0), Complex(0.0)); }
  static SpherePoint from_chart(Chart chart, Complex coordinate);

  Complex hz() const noexcept { return z_; }
  Complex hw() const noexcept { return w_; }

  bool is_infinity() const noexcept { return w_ == Complex(0.0); }
  // Z/W, or complex infinity when W == 0.
  Complex finite() const noexcept;

  // Finite when |z| <= 1, otherwise Inverted; coordinates are then bounded by 1.
  Chart preferred_chart() const noexcept;
  Complex coordinate(Chart chart) const noexcept;

 private:
  Complex z_{0.0};
  Complex w_{1.0};
};

// Chordal distance 2|z1 - z2| / sqrt((1+|z1|^2)(1+|z2|^2)), in [0, 2].
double chordal_distance(const SpherePoint& a, const SpherePoint& b) noexcept;

std::ostream& operator<<(std::ostream& os, const SpherePoint& p);

}  // namespace lattes_forge
