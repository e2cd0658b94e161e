#include "lattes_forge/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace lattes_forge {

Complex horner(std::span<const Complex> c, Complex x) noexcept {
  Complex acc{0.0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::pair<Complex, Complex> horner_with_derivative(std::span<const Complex> c, Complex x) noexcept {
  Complex p{0.0}, dp{0.0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    dp = dp * x + p;
    p = p * x + *it;
  }
  return {p, dp};
}

PolyJet horner_jet(std::span<const Complex> c, Complex x) noexcept {
  Complex p{0.0}, d1{0.0}, d2{0.0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    d2 = d2 * x + 2.0 * d1;
    d1 = d1 * x + p;
    p = p * x + *it;
  }
  return {p, d1, d2};
}

std::vector<Complex> derivative_coefficients(std::span<const Complex> c) {
  if (c.size() <= 1) return {Complex(0.0)};
  std::vector<Complex> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = static_cast<double>(i) * c[i];
  return d;
}

std::vector<Complex> multiply(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<Complex> out(a.size() + b.size() - 1, Complex(0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<Complex> polynomial_roots(std::span<const Complex> c, double trim) {
  double scale = 0.0;
  for (auto x : c) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) fail(ErrorCode::InvalidArgument, "roots of the zero polynomial");
  std::size_t n = c.size();
  while (n > 1 && std::abs(c[n - 1]) <= trim * scale) --n;
  int degree = static_cast<int>(n) - 1;
  if (degree <= 0) return {};
  Complex lead = c[n - 1];
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -c[i] / lead;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "companion eigenvalues failed");
  std::vector<Complex> roots(degree);
  for (int i = 0; i < degree; ++i) roots[i] = solver.eigenvalues()[i];
  return roots;
}

namespace {

SpherePoint polish(std::span<const Complex> c, std::span<const Complex> rev, const SpherePoint& p) {
  Chart chart = p.preferred_chart();
  std::span<const Complex> poly = chart == Chart::Finite ? c : rev;
  Complex x = p.coordinate(chart);
  for (int it = 0; it < 8; ++it) {
    auto [f, df] = horner_with_derivative(poly, x);
    if (df == Complex(0.0)) break;
    Complex step = f / df;
    // Reject steps that leave the chart's unit disk by a wide margin; the
    // companion estimate is already accurate to a few ulps there.
    if (!std::isfinite(std::abs(step)) || std::abs(step) > 0.1 * (1.0 + std::abs(x))) break;
    x -= step;
    if (std::abs(step) <= 4 * kEps * (1.0 + std::abs(x))) break;
  }
  return SpherePoint::from_chart(chart, x);
}

}  // namespace

std::vector<RootCluster> homogeneous_roots(std::span<const Complex> c, double cluster_radius) {
  const int n = static_cast<int>(c.size()) - 1;
  std::vector<Complex> rev(c.rbegin(), c.rend());
  std::vector<Complex> finite = polynomial_roots(c);
  const int at_infinity = n - static_cast<int>(finite.size());

  std::vector<SpherePoint> pts;
  pts.reserve(n);
  for (auto r : finite) pts.emplace_back(r);
  for (int i = 0; i < at_infinity; ++i) pts.push_back(SpherePoint::infinity());

  // Single-linkage clustering; sizes are at most ~50 so O(n^2) is fine.
  std::vector<int> label(pts.size());
  std::iota(label.begin(), label.end(), 0);
  auto find = [&](int i) {
    while (label[i] != i) i = label[i] = label[label[i]];
    return i;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (chordal_distance(pts[i], pts[j]) < cluster_radius) label[find(int(i))] = find(int(j));

  std::vector<RootCluster> out;
  std::vector<int> seen;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int root = find(int(i));
    if (std::find(seen.begin(), seen.end(), root) != seen.end()) continue;
    seen.push_back(root);
    std::vector<std::size_t> members;
    bool has_infinity = false;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (find(int(j)) == root) {
        members.push_back(j);
        has_infinity = has_infinity || pts[j].is_infinity();
      }
    RootCluster cluster;
    cluster.multiplicity = static_cast<int>(members.size());
    if (has_infinity) {
      cluster.point = SpherePoint::infinity();
    } else if (members.size() == 1) {
      cluster.point = polish(c, rev, pts[members[0]]);
    } else {
      // The centroid of a split multiple root is far more accurate than its members.
      Chart chart = pts[members[0]].preferred_chart();
      Complex sum{0.0};
      for (auto j : members) sum += pts[j].coordinate(chart);
      cluster.point = SpherePoint::from_chart(chart, sum / static_cast<double>(members.size()));
    }
    out.push_back(cluster);
  }
  return out;
}

}  // namespace lattes_forge
