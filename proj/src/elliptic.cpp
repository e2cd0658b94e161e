#include "lattes_forge/elliptic.hpp"

#include <cmath>
#include <sstream>

namespace lattes_forge::elliptic {
namespace {

constexpr Complex kI{0.0, 1.0};

double centered(double x) noexcept { return x - std::round(x); }

double truncation_threshold(double tol) { return std::min(tol, 1e-17); }

void require_positive_tol(double tol) { require(tol > 0.0, "tolerance must be positive"); }

// wp(z) for z = s + t gamma with |s|, |t| <= 1/2:
//   pi^2 [ 1/sin^2(pi z) - 1/3 + 4 sum_n n/(1-q^2n) (2 q^2n - (q^2 E)^n - (q^2/E)^n) ]
// where E = exp(2 pi i z).  The grouped powers stay bounded by exp(-pi n Im gamma).
Complex wp_series(Complex z, Complex gamma, double tol) {
  const Complex q2 = std::exp(2.0 * kPi * kI * gamma);
  const Complex e = std::exp(2.0 * kPi * kI * z);
  const Complex sine = std::sin(kPi * z);
  Complex sum = 1.0 / (sine * sine) - 1.0 / 3.0;
  const Complex up = q2 * e, down = q2 / e;
  // Terms can vanish individually (E = -1 kills every even one), so stop on
  // an a priori bound rather than on the computed term.
  const double rq = std::abs(q2), ru = std::abs(up), rd = std::abs(down);
  Complex qn{1.0}, un{1.0}, dn{1.0};
  double bq = 1.0, bu = 1.0, bd = 1.0;
  const double thresh = truncation_threshold(tol);
  for (int n = 1; n <= kMaxSeriesTerms; ++n) {
    qn *= q2;
    un *= up;
    dn *= down;
    bq *= rq;
    bu *= ru;
    bd *= rd;
    sum += 4.0 * n / (1.0 - qn) * (2.0 * qn - un - dn);
    double bound = 4.0 * n / (1.0 - bq) * (2.0 * bq + bu + bd);
    if (bound <= thresh * (1.0 + std::abs(sum))) return kPi * kPi * sum;
  }
  std::ostringstream msg;
  msg << "wp series needs more than " << kMaxSeriesTerms << " terms for gamma = " << gamma;
  fail(ErrorCode::NonConvergent, msg.str());
}

// wp(z0 + d) - wp(z0) with the same grouping, written with sine products so
// that the difference never cancels:
//   1/sin^2 A - 1/sin^2 B = sin(B - A) sin(B + A) / (sin^2 A sin^2 B)
//   cos(2 pi n z0) - cos(2 pi n z) = 2 sin(pi n (z + z0)) sin(pi n (z - z0))
Complex wp_difference_series(Complex z0, Complex d, Complex gamma, double tol) {
  const Complex z = z0 + d;
  const Complex q2 = std::exp(2.0 * kPi * kI * gamma);
  const Complex sa = std::sin(kPi * z), sb = std::sin(kPi * z0);
  Complex sum = std::sin(-kPi * d) * std::sin(kPi * (z + z0)) / (sa * sa * sb * sb);
  Complex qn{1.0};
  const double thresh = truncation_threshold(tol);
  const double decay = -2.0 * kPi * gamma.imag();
  const double grow = kPi * (std::abs((z + z0).imag()) + std::abs(d.imag()));
  for (int n = 1; n <= kMaxSeriesTerms; ++n) {
    qn *= q2;
    // 8 n q^2n/(1-q^2n) (cos(2 pi n z0) - cos(2 pi n z)); the growing sines
    // are paired with q^n factors to keep intermediates bounded.
    Complex half = std::exp(0.5 * n * 2.0 * kPi * Complex(0.0, 1.0) * gamma);
    sum += 16.0 * n / (1.0 - qn) * (half * std::sin(kPi * n * (z + z0))) *
           (half * std::sin(kPi * n * d));
    double log_bound = n * (decay + grow);
    double bound = 16.0 * n * std::exp(log_bound) / (1.0 - std::abs(qn)) * kPi * n * (1.0 + std::abs(d));
    if (bound <= thresh * (1.0 + std::abs(sum))) return kPi * kPi * sum;
  }
  fail(ErrorCode::NonConvergent, "wp difference series did not converge");
}

Complex reduced_position(TorusPoint tau, Complex gamma) {
  return centered(tau.s) + centered(tau.t) * gamma;
}

}  // namespace

TorusParameter::TorusParameter(Complex gamma) : gamma_(gamma) {
  if (!(gamma.imag() > 0.0)) {
    std::ostringstream msg;
    msg << "torus parameter must lie in the upper half plane, got " << gamma;
    fail(ErrorCode::InvalidArgument, msg.str());
  }
}

TorusPoint TorusPoint::reduced() const noexcept {
  auto wrap = [](double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
  };
  return {wrap(s), wrap(t)};
}

bool RationalTorusPoint::in_half_lattice() const noexcept {
  return (s.den() == 1 || s.den() == 2) && (t.den() == 1 || t.den() == 2);
}

bool RationalTorusPoint::same_theta_image(const RationalTorusPoint& other) const {
  RationalTorusPoint a = reduced(), b = other.reduced();
  if (a == b) return true;
  RationalTorusPoint minus_b{(-b.s).frac(), (-b.t).frac()};
  return a == minus_b;
}

Complex weierstrass_p(TorusPoint tau, const TorusParameter& gamma, double tol) {
  require_positive_tol(tol);
  double s = centered(tau.s), t = centered(tau.t);
  if (s == 0.0 && t == 0.0) fail(ErrorCode::PoleAtLatticePoint, "wp has a pole at lattice points");
  return wp_series(s + t * gamma.value(), gamma.value(), tol);
}

HalfPeriodValues half_periods(const TorusParameter& gamma, double tol) {
  return {weierstrass_p({0.5, 0.0}, gamma, tol), weierstrass_p({0.5, 0.5}, gamma, tol),
          weierstrass_p({0.0, 0.5}, gamma, tol)};
}

Theta::Theta(const TorusParameter& gamma, double tol)
    : gamma_(gamma), tol_(tol), e_(half_periods(gamma, tol)) {
  w_ = (e_.e1 - e_.e2) / (e_.e3 - e_.e2);
}

SpherePoint Theta::operator()(TorusPoint tau) const {
  double s = centered(tau.s), t = centered(tau.t);
  if (s == 0.0 && t == 0.0) return SpherePoint(Complex(0.0));
  Complex p = wp_series(s + t * gamma_.value(), gamma_.value(), tol_);
  return SpherePoint(e_.e1 - e_.e2, p - e_.e2);
}

Complex Theta::difference(TorusPoint base, Complex delta) const {
  Complex z0 = reduced_position(base, gamma_.value());
  if (z0 == Complex(0.0)) fail(ErrorCode::PoleAtLatticePoint, "difference based at a lattice point");
  Complex p0 = wp_series(z0, gamma_.value(), tol_);
  Complex dp = wp_difference_series(z0, delta, gamma_.value(), tol_);
  Complex a = e_.e1 - e_.e2;
  // a/(p0 + dp - e2) - a/(p0 - e2)
  return -a * dp / ((p0 + dp - e_.e2) * (p0 - e_.e2));
}

SpherePoint theta_map(TorusPoint tau, const TorusParameter& gamma) { return Theta(gamma)(tau); }

namespace {

// Two Richardson steps on second differences with ratios h, h/2, h/4.
template <class SecondDifference>
Complex extrapolated_half_second_derivative(SecondDifference d2, double h) {
  Complex d0 = d2(h), d1 = d2(h / 2), d4 = d2(h / 4);
  Complex r0 = (4.0 * d1 - d0) / 3.0, r1 = (4.0 * d4 - d1) / 3.0;
  return (16.0 * r1 - r0) / 15.0 / 2.0;
}

ThetaData finish(ThetaData data, double tol) {
  const Complex v = data.v, w = data.w;
  data.kappa = 4.0 * data.lambda / (v * (v - w));
  Complex kappa_mu = 4.0 * data.mu / (w * (w - v));
  data.lemma1_residual = std::abs(data.lambda / v + data.mu / w);
  data.kappa_residual = std::abs(data.kappa - kappa_mu);
  if (std::abs(v - w) == 0.0 || data.lambda == Complex(0.0) || data.mu == Complex(0.0))
    fail(ErrorCode::LemmaViolation, "degenerate Theta data (v == w or vanishing coefficient)");
  if (data.lemma1_residual > 100.0 * tol || data.kappa_residual > 100.0 * tol) {
    std::ostringstream msg;
    msg << "lambda/v + mu/w = " << data.lemma1_residual << ", kappa mismatch " << data.kappa_residual
        << " at gamma = " << data.gamma;
    fail(ErrorCode::LemmaViolation, msg.str());
  }
  return data;
}

}  // namespace

ThetaData theta_data(const TorusParameter& gamma, double tol) {
  require_positive_tol(tol);
  Theta theta(gamma, tol);
  const double h = std::pow(tol, 0.25);
  ThetaData data;
  data.gamma = gamma.value();
  data.v = 1.0;
  data.w = theta.w();
  // Theta is even about every half period, so D(h) = 2 (Theta(c + h) - Theta(c)) / h^2.
  data.lambda = extrapolated_half_second_derivative(
      [&](double step) { return 2.0 * theta.difference({0.5, 0.0}, step) / (step * step); }, h);
  data.mu = extrapolated_half_second_derivative(
      [&](double step) { return 2.0 * theta.difference({0.0, 0.5}, step) / (step * step); }, h);
  return finish(data, tol);
}

ThetaData theta_data(const ThetaFunction& theta, const TorusParameter& gamma, double tol) {
  require_positive_tol(tol);
  const double h = std::pow(tol, 0.25);
  auto value = [&](TorusPoint p) { return theta(p).finite(); };
  ThetaData data;
  data.gamma = gamma.value();
  data.v = value({0.5, 0.0});
  data.w = value({0.0, 0.5});
  auto d2_at = [&](TorusPoint c) {
    Complex center = value(c);
    return [=, &value](double step) {
      return (value({c.s + step, c.t}) + value({c.s - step, c.t}) - 2.0 * center) / (step * step);
    };
  };
  data.lambda = extrapolated_half_second_derivative(d2_at({0.5, 0.0}), h);
  data.mu = extrapolated_half_second_derivative(d2_at({0.0, 0.5}), h);
  return finish(data, tol);
}

}  // namespace lattes_forge::elliptic
