#include "lattes_forge/rational_map.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "lattes_forge/polynomial.hpp"

namespace lattes_forge {

RationalMapCoeffs::RationalMapCoeffs(std::vector<Complex> num, std::vector<Complex> den)
    : num_(std::move(num)), den_(std::move(den)) {
  require(num_.size() == den_.size() && num_.size() >= 2,
          "numerator and denominator need D+1 >= 2 coefficients each");
  // Pick the first coefficient within a relative 1e-9 of the maximum so that
  // near-ties resolve the same way for every rebuild.
  double biggest = 0.0;
  for (auto c : num_) biggest = std::max(biggest, std::abs(c));
  for (auto c : den_) biggest = std::max(biggest, std::abs(c));
  require(biggest > 0.0 && std::isfinite(biggest), "rational map coefficients are all zero or non-finite");
  Complex pivot{0.0};
  for (auto* vec : {&num_, &den_}) {
    for (auto c : *vec)
      if (pivot == Complex(0.0) && std::abs(c) >= biggest * (1.0 - 1e-9)) pivot = c;
  }
  double rescale = 0.0;
  for (auto* vec : {&num_, &den_})
    for (auto& c : *vec) {
      c /= pivot;
      rescale = std::max(rescale, std::abs(c));
    }
  for (auto* vec : {&num_, &den_})
    for (auto& c : *vec) c /= rescale;
}

int RationalMapCoeffs::effective_degree(double rel_floor) const noexcept {
  auto top = [&](const std::vector<Complex>& c) {
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i)
      if (std::abs(c[i]) > rel_floor) return i;
    return -1;
  };
  // Both constant terms vanishing means a common root at 0; the margin check
  // catches that, degree only looks at the top.
  return std::max(top(num_), top(den_));
}

namespace {

Eigen::MatrixXcd sylvester(const std::vector<Complex>& p, const std::vector<Complex>& q) {
  const int d = static_cast<int>(p.size()) - 1;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  for (int row = 0; row < d; ++row)
    for (int i = 0; i <= d; ++i) {
      s(row, row + i) = p[d - i];
      s(d + row, row + i) = q[d - i];
    }
  return s;
}

}  // namespace

namespace {

Complex form_at(const std::vector<Complex>& c, const SpherePoint& p) {
  const int d = static_cast<int>(c.size()) - 1;
  Complex z = p.hz(), w = p.hw(), sum{0.0};
  for (int i = d; i >= 0; --i) {
    Complex term = c[i];
    for (int j = 0; j < i; ++j) term *= z;
    for (int j = i; j < d; ++j) term *= w;
    sum += term;
  }
  return sum;
}

// Smallest |g| over the zeros of f on the sphere.
double smallest_at_roots(const std::vector<Complex>& f, const std::vector<Complex>& g) {
  double largest = 0.0;
  for (auto c : f) largest = std::max(largest, std::abs(c));
  if (largest == 0.0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : homogeneous_roots(f, 0.0)) best = std::min(best, std::abs(form_at(g, r.point)));
  return best;
}

}  // namespace

double RationalMapCoeffs::coprimality_margin() const {
  return std::min(smallest_at_roots(num_, den_), smallest_at_roots(den_, num_));
}

Complex RationalMapCoeffs::resultant() const {
  return sylvester(num_, den_).partialPivLu().determinant();
}

void RationalMapCoeffs::validate(double margin_floor) const {
  if (effective_degree() != degree())
    fail(ErrorCode::InvalidArgument, "effective degree " + std::to_string(effective_degree()) +
                                         " differs from declared degree " + std::to_string(degree()));
  if (coprimality_margin() < margin_floor)
    fail(ErrorCode::InvalidArgument, "numerator and denominator share a root");
}

RationalMapCoeffs RationalMapCoeffs::scaled(Complex factor) const {
  std::vector<Complex> num = num_;
  for (auto& c : num) c *= factor;
  return RationalMapCoeffs(std::move(num), den_);
}

std::vector<Complex> RationalMapCoeffs::wronskian() const {
  auto dp = derivative_coefficients(num_);
  auto dq = derivative_coefficients(den_);
  auto a = multiply(dp, den_);
  auto b = multiply(num_, dq);
  const std::size_t n = 2 * static_cast<std::size_t>(degree()) - 1;
  std::vector<Complex> w(n, Complex(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (i < a.size()) w[i] += a[i];
    if (i < b.size()) w[i] -= b[i];
  }
  return w;
}

double projective_distance(const RationalMapCoeffs& f, const RationalMapCoeffs& g) {
  require(f.degree() == g.degree(), "projective distance needs equal degrees");
  Complex inner{0.0};
  double nf = 0.0, ng = 0.0;
  auto accumulate = [&](const std::vector<Complex>& a, const std::vector<Complex>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      inner += std::conj(b[i]) * a[i];
      nf += std::norm(a[i]);
      ng += std::norm(b[i]);
    }
  };
  accumulate(f.num(), g.num());
  accumulate(f.den(), g.den());
  // Align phases, then measure the chord between the unit vectors; this keeps
  // full precision for nearby maps where 1 - cos^2 would not.
  Complex phase = std::abs(inner) > 0.0 ? inner / std::abs(inner) : Complex(1.0);
  double sf = 1.0 / std::sqrt(nf), sg = 1.0 / std::sqrt(ng);
  double chord2 = 0.0;
  auto diff = [&](const std::vector<Complex>& a, const std::vector<Complex>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) chord2 += std::norm(a[i] * sf - phase * b[i] * sg);
  };
  diff(f.num(), g.num());
  diff(f.den(), g.den());
  return std::sqrt(chord2);
}

}  // namespace lattes_forge
