#include "lattes_forge/lattes.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

#include "lattes_forge/dynamics.hpp"

namespace lattes_forge::lattes {

using elliptic::RationalTorusPoint;
using elliptic::Theta;
using elliptic::TorusParameter;
using elliptic::TorusPoint;

CaseTag case_from_int(int tag) {
  if (tag < 1 || tag > 3) fail(ErrorCode::InvalidArgument, "case must be 1, 2 or 3");
  return static_cast<CaseTag>(tag);
}

std::string_view to_string(CaseTag tag) noexcept {
  switch (tag) {
    case CaseTag::EvenZero: return "EvenZero";
    case CaseTag::OddZero: return "OddZero";
    case CaseTag::OddHalf: return "OddHalf";
  }
  return "?";
}

LattesSpec::LattesSpec(TorusParameter gamma, int a, CaseTag case_tag, int max_degree)
    : gamma_(gamma), a_(a), case_(case_tag) {
  if (std::abs(a) < 2) fail(ErrorCode::InvalidArgument, "|a| must be at least 2");
  bool even = a % 2 == 0;
  if (case_tag == CaseTag::EvenZero && !even)
    fail(ErrorCode::InvalidArgument, "case EvenZero needs an even a");
  if (case_tag != CaseTag::EvenZero && even)
    fail(ErrorCode::InvalidArgument, std::string(to_string(case_tag)) + " needs an odd a");
  if (a * a > max_degree)
    fail(ErrorCode::InvalidArgument,
         "degree " + std::to_string(a * a) + " exceeds the cap " + std::to_string(max_degree));
}

RationalTorusPoint LattesSpec::translation() const {
  if (case_ == CaseTag::OddHalf) return {Rational(1, 2), Rational(1, 2)};
  return {Rational(0), Rational(0)};
}

TorusPoint torus_endo(const LattesSpec& spec, TorusPoint tau) {
  RationalTorusPoint b = spec.translation();
  return TorusPoint{spec.a() * tau.s + b.s.to_double(), spec.a() * tau.t + b.t.to_double()}.reduced();
}

RationalTorusPoint torus_endo(const LattesSpec& spec, const RationalTorusPoint& tau) {
  RationalTorusPoint b = spec.translation();
  Rational a(spec.a());
  return RationalTorusPoint{a * tau.s + b.s, a * tau.t + b.t}.reduced();
}

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double distance_to_half_lattice(TorusPoint p, Complex gamma) {
  double best = std::numeric_limits<double>::infinity();
  for (double hs : {0.0, 0.5})
    for (double ht : {0.0, 0.5}) {
      double ds = p.s - hs - std::round(p.s - hs), dt = p.t - ht - std::round(p.t - ht);
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) best = std::min(best, std::abs((ds + i) + (dt + j) * gamma));
    }
  return best;
}

// Additive recurrence with the plastic-number increments (low discrepancy in 2D).
class QuasiRandom {
 public:
  explicit QuasiRandom(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    s_ = unit(rng);
    t_ = unit(rng);
  }
  TorusPoint next() {
    constexpr double g = 1.32471795724474602596;
    s_ += 1.0 / g;
    t_ += 1.0 / (g * g);
    s_ -= std::floor(s_);
    t_ -= std::floor(t_);
    return {s_, t_};
  }

 private:
  double s_ = 0.0, t_ = 0.0;
};

double holdout_residual(const RationalMapCoeffs& f, const LattesSpec& spec, const Theta& theta, int n,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    TorusPoint tau{unit(rng), unit(rng)};
    SpherePoint lhs = dynamics::eval(f, theta(tau));
    SpherePoint rhs = theta(torus_endo(spec, tau));
    worst = std::max(worst, chordal_distance(lhs, rhs));
  }
  return worst;
}

}  // namespace

RationalMapCoeffs build_rational_map(const LattesSpec& spec, const BuildOptions& options,
                                     BuildDiagnostics* diagnostics) {
  return build_rational_map(spec, Theta(spec.gamma()), options, diagnostics);
}

RationalMapCoeffs build_rational_map(const LattesSpec& spec, const Theta& theta, const BuildOptions& options,
                                     BuildDiagnostics* diagnostics) {
  require(options.oversample >= 2, "oversample must be at least 2");
  require(options.tol > 0.0 && options.holdout >= 1, "invalid build options");
  const int d = spec.degree();
  const int cols = 2 * (d + 1);
  const int rows = options.oversample * cols;
  const Complex gamma = spec.gamma().value();

  Eigen::MatrixXcd system(rows, cols);
  QuasiRandom sequence(options.seed);
  int accepted = 0;
  for (int attempt = 0; accepted < rows; ++attempt) {
    if (attempt > 100 * rows) fail(ErrorCode::IllConditioned, "could not draw enough chart-safe samples");
    TorusPoint tau = sequence.next();
    if (distance_to_half_lattice(tau, gamma) < 0.05) continue;
    Complex z = theta(tau).finite(), w = theta(torus_endo(spec, tau)).finite();
    if (!(std::abs(z) <= 10.0) || !(std::abs(w) <= 10.0)) continue;
    Complex power{1.0};
    for (int i = 0; i <= d; ++i) {
      system(accepted, i) = power;
      system(accepted, d + 1 + i) = -w * power;
      power *= z;
    }
    system.row(accepted) /= system.row(accepted).norm();
    ++accepted;
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(system, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smallest = sv(cols - 1), second = sv(cols - 2);
  if (second <= 1e3 * smallest) {
    std::ostringstream msg;
    msg << "null direction is not isolated: singular values " << second << " and " << smallest;
    fail(ErrorCode::IllConditioned, msg.str());
  }
  Eigen::VectorXcd null = svd.matrixV().col(cols - 1);
  std::vector<Complex> num(d + 1), den(d + 1);
  for (int i = 0; i <= d; ++i) {
    num[i] = null(i);
    den[i] = null(d + 1 + i);
  }
  RationalMapCoeffs f(std::move(num), std::move(den));

  double residual = holdout_residual(f, spec, theta, options.holdout, options.seed ^ 0x9e3779b97f4a7c15ULL);
  if (diagnostics) *diagnostics = {smallest, second, residual, rows};
  if (!(residual < options.tol)) {
    std::ostringstream msg;
    msg << "held-out semiconjugacy residual " << residual << " is not below " << options.tol;
    fail(ErrorCode::ValidationFailed, msg.str());
  }
  return f;
}

std::vector<SpherePoint> critical_values(const LattesSpec& spec) {
  Theta theta(spec.gamma());
  std::vector<SpherePoint> out;
  if (std::abs(spec.a()) >= 3) out.emplace_back(Complex(0.0));
  out.push_back(SpherePoint::infinity());
  out.emplace_back(Complex(1.0));
  out.emplace_back(theta.w());
  return out;
}

std::vector<SpherePoint> postcritical_set(const LattesSpec& spec) {
  Theta theta(spec.gamma());
  return {SpherePoint(Complex(0.0)), SpherePoint::infinity(), SpherePoint(Complex(1.0)), SpherePoint(theta.w())};
}

double verify_semiconjugacy(const RationalMapCoeffs& f, const LattesSpec& spec, int n, std::uint64_t seed) {
  require(n >= 1, "verify_semiconjugacy needs n >= 1");
  return holdout_residual(f, spec, Theta(spec.gamma()), n, seed);
}

LattesInstance LattesInstance::build(const LattesSpec& spec, double tol, const BuildOptions& options) {
  Theta theta(spec.gamma(), tol);
  return {spec, elliptic::theta_data(spec.gamma(), tol), build_rational_map(spec, theta, options)};
}

}  // namespace lattes_forge::lattes
