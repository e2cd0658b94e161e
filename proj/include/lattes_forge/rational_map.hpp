#pragma once

#include <vector>

#include "lattes_forge/core.hpp"

namespace lattes_forge {

// Degree-D rational self-map of the sphere, f = P/Q, stored as D+1
// little-endian coefficients for each of P and Q.  On construction the pair
// is scaled so that its largest coefficient is exactly 1 (a projective
// normalization: f is unchanged).
class RationalMapCoeffs {
 public:
  // The identity z / 1.
  RationalMapCoeffs() : RationalMapCoeffs({Complex(0.0), Complex(1.0)}, {Complex(1.0), Complex(0.0)}) {}
  RationalMapCoeffs(std::vector<Complex> num, std::vector<Complex> den);

  int degree() const noexcept { return static_cast<int>(num_.size()) - 1; }
  const std::vector<Complex>& num() const noexcept { return num_; }
  const std::vector<Complex>& den() const noexcept { return den_; }

  // max(deg P, deg Q) after discarding coefficients below rel_floor.
  int effective_degree(double rel_floor = 1e-12) const noexcept;

  // Smallest value of either form at a zero of the other, points scaled to
  // max(|Z|, |W|) = 1; zero iff P and Q share a root on the sphere.
  double coprimality_margin() const;
  Complex resultant() const;

  // Throws InvalidArgument when the coefficients do not describe a map of
  // exactly the stored degree.
  void validate(double margin_floor = 1e-12) const;

  // factor * P / Q, renormalized.
  RationalMapCoeffs scaled(Complex factor) const;

  // Coefficients of the binary form P_Z Q_W - P_W Q_Z / D, degree 2D - 2,
  // whose zeros are the critical points.
  std::vector<Complex> wronskian() const;

 private:
  std::vector<Complex> num_;
  std::vector<Complex> den_;
};

// Chord between the phase-aligned unit coefficient vectors; 0 iff the maps coincide.
double projective_distance(const RationalMapCoeffs& f, const RationalMapCoeffs& g);

}  // namespace lattes_forge
