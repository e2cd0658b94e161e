#include "lattes_forge/sphere.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace lattes_forge {

SpherePoint::SpherePoint(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    z_ = 1.0;
    w_ = 0.0;
  } else if (std::abs(z) <= 1.0) {
    z_ = z;
    w_ = 1.0;
  } else {
    z_ = 1.0;
    w_ = 1.0 / z;
  }
}

SpherePoint::SpherePoint(Complex Z, Complex W) {
  double m = std::max(std::abs(Z), std::abs(W));
  if (!(m > 0.0) || !std::isfinite(m))
    fail(ErrorCode::IndeterminatePoint, "projective point (0 : 0) or non-finite coordinates");
  // Dividing by the larger coordinate keeps one entry exactly 1.
  if (std::abs(Z) >= std::abs(W)) {
    w_ = W / Z;
    z_ = 1.0;
  } else {
    z_ = Z / W;
    w_ = 1.0;
  }
}

SpherePoint SpherePoint::from_chart(Chart chart, Complex coordinate) {
  if (chart == Chart::Finite) return SpherePoint(coordinate, Complex(1.0));
  return SpherePoint(Complex(1.0), coordinate);
}

Complex SpherePoint::finite() const noexcept {
  if (w_ == Complex(0.0)) {
    double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  return z_ / w_;
}

Chart SpherePoint::preferred_chart() const noexcept {
  return std::abs(z_) <= std::abs(w_) ? Chart::Finite : Chart::Inverted;
}

Complex SpherePoint::coordinate(Chart chart) const noexcept {
  double inf = std::numeric_limits<double>::infinity();
  if (chart == Chart::Finite) return w_ == Complex(0.0) ? Complex(inf, inf) : z_ / w_;
  return z_ == Complex(0.0) ? Complex(inf, inf) : w_ / z_;
}

double chordal_distance(const SpherePoint& a, const SpherePoint& b) noexcept {
  double na = std::hypot(std::abs(a.hz()), std::abs(a.hw()));
  double nb = std::hypot(std::abs(b.hz()), std::abs(b.hw()));
  return 2.0 * std::abs(a.hz() * b.hw() - b.hz() * a.hw()) / (na * nb);
}

std::ostream& operator<<(std::ostream& os, const SpherePoint& p) {
  if (p.is_infinity()) return os << "inf";
  return os << p.finite();
}

}  // namespace lattes_forge
