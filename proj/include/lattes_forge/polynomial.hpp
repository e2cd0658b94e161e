#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lattes_forge/core.hpp"
#include "lattes_forge/sphere.hpp"

namespace lattes_forge {

// Coefficient vectors are little-endian: c[i] multiplies x^i.
Complex horner(std::span<const Complex> c, Complex x) noexcept;
// Value and first derivative in one pass.
std::pair<Complex, Complex> horner_with_derivative(std::span<const Complex> c, Complex x) noexcept;
struct PolyJet {
  Complex value;
  Complex d1;
  Complex d2;
};
// Value with first and second derivatives.
PolyJet horner_jet(std::span<const Complex> c, Complex x) noexcept;

std::vector<Complex> derivative_coefficients(std::span<const Complex> c);
std::vector<Complex> multiply(std::span<const Complex> a, std::span<const Complex> b);

// Roots of the polynomial after dropping leading coefficients below
// trim * max|c|, via eigenvalues of the companion matrix.
std::vector<Complex> polynomial_roots(std::span<const Complex> c, double trim = 1e-13);

struct RootCluster {
  SpherePoint point;
  int multiplicity = 1;
};

// Zeros on the sphere of the binary form sum c[i] Z^i W^(n-i), n = c.size()-1,
// counted with multiplicity (they always sum to n).  Roots closer than
// cluster_radius in the chordal metric are merged; isolated roots are
// Newton-polished in their preferred chart.
std::vector<RootCluster> homogeneous_roots(std::span<const Complex> c, double cluster_radius);

}  // namespace lattes_forge
