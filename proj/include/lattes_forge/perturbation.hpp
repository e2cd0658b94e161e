#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lattes_forge/dynamics.hpp"
#include "lattes_forge/elliptic.hpp"
#include "lattes_forge/lattes.hpp"
#include "lattes_forge/rational.hpp"

namespace lattes_forge::perturbation {

// sigma = alpha + alpha' gamma and tau = beta + beta' gamma.
struct RationalPair {
  Rational alpha;
  Rational alpha_prime;
  Rational beta;
  Rational beta_prime;

  Complex sigma(Complex gamma) const { return alpha.to_double() + alpha_prime.to_double() * gamma; }
  Complex tau(Complex gamma) const { return beta.to_double() + beta_prime.to_double() * gamma; }
};

// (alpha, alpha', beta, beta') = (-x0, 1, y0, 0).  Throws
// CoprimalityViolation unless the denominators of x0 and y0 are prime to 2a.
RationalPair standard_parameters(const Rational& x0, const Rational& y0, int a);

// f_t = (1 + t) f.
struct PerturbedFamily {
  lattes::LattesSpec spec;
  RationalMapCoeffs base_map;
  Complex t{0.0};

  RationalMapCoeffs member() const { return member(t); }
  RationalMapCoeffs member(Complex parameter) const;
};

// X: points 1/2 + sigma/a^k near v.  Y: points gamma/2 + tau/a^k near w.
enum class Family { X, Y };
std::string_view to_string(Family family) noexcept;

struct MarkOptions {
  double tol = 1e-8;
  int max_iter = 400;
  // Accept orbits that meet critical points or land in {0, inf, v, w}.
  bool allow_degenerate = false;
};

struct MarkedPreperiodicPoint {
  int k = 0;
  Family family = Family::X;
  elliptic::RationalTorusPoint torus_address;
  // sigma or tau in lattice coordinates, when built from a RationalPair.
  std::optional<elliptic::RationalTorusPoint> offset;
  SpherePoint position;
  // Exact torus orbit up to the end of the first period and its image.
  std::vector<elliptic::RationalTorusPoint> itinerary;
  std::vector<SpherePoint> forward_orbit;
  int preperiod = 0;
  int period = 1;
  // Orbit indices whose point is a critical point of f.
  std::vector<int> critical_steps;
  // Landing cycle inside {0, inf, v, w} or orbit through a critical point.
  bool degenerate = false;
  dynamics::OrbitCertificate certificate;
};

MarkedPreperiodicPoint make_marked_point(const lattes::LattesInstance& instance, const RationalPair& pair, int k,
                                         Family family, const MarkOptions& options = {});
// Same bookkeeping for an arbitrary rational torus point.
MarkedPreperiodicPoint mark_torus_point(const lattes::LattesInstance& instance,
                                        const elliptic::RationalTorusPoint& address, const MarkOptions& options);

struct TrackOptions {
  int steps = 4;
  int max_halvings = 24;
  double tol = 1e-13;
  // Directions used to pick the square-root branch at successive critical
  // orbit steps; missing entries take the principal root.
  std::vector<Complex> branch_hints;
};

struct TrackResult {
  SpherePoint point;
  // Continued orbit: chain[i] moves with orbit point i, chain.back() on the cycle.
  std::vector<SpherePoint> chain;
  dynamics::CycleData cycle;
  // Offset from the critical point chosen at each critical step, in orbit order.
  std::vector<Complex> critical_offsets;
  // max over the chain of the distance between g(chain[i]) and chain[i+1].
  double conjugacy_residual = 0.0;
};

// Holomorphic motion of the marked point: continue the landing cycle to t and
// pull the orbit back branch by branch, in adaptive parameter substeps.
TrackResult track_marked_point(const PerturbedFamily& family, const MarkedPreperiodicPoint& marked, Complex t,
                               const TrackOptions& options = {});

struct TrackedLimits {
  Complex x_dot;
  Complex y_dot;
  Complex v_dot;
  Complex w_dot;
  double x_error = 0.0;
  double y_error = 0.0;
  // (1 + c) v and (1 + c) w with the case constant c.
  Complex x_dot_closed;
  Complex y_dot_closed;
};

// Case constant c: -1, a^2/(1 - a^2) or -a^2/(1 + a^2).
double case_constant(const lattes::LattesSpec& spec);

TrackedLimits tracked_limits(const lattes::LattesInstance& instance, double h = 1e-4);
TrackedLimits tracked_limits(const lattes::LattesSpec& spec, double h = 1e-4);

struct Lemma3Report {
  Complex c_from_x;
  Complex c_from_y;
  Complex c_measured;
  double c_expected = 0.0;
  double residual = 0.0;
  double error_estimate = 0.0;
  TrackedLimits limits;
};

// Throws LemmaViolation if the two quotients, or the measured and closed-form
// derivatives, disagree beyond the finite-difference error.
Lemma3Report verify_lemma3(const lattes::LattesInstance& instance, double h = 1e-4);
Lemma3Report verify_lemma3(const lattes::LattesSpec& spec, double h = 1e-4);

// a^(2k) * (position at t = u/a^(2k) minus the moving critical value (1+t)v
// or (1+t)w), in the finite chart.
Complex rescaled_collision_fn(const lattes::LattesInstance& instance, const MarkedPreperiodicPoint& marked,
                              Complex u, const TrackOptions& options = {});

// Limit of the root in u as k grows: -lambda sigma^2/(c v) or -mu tau^2/(c w).
Complex limit_u(const lattes::LattesInstance& instance, const MarkedPreperiodicPoint& marked);

// a^(2k) above 1e8 cannot be resolved in double precision.
void require_feasible(int a, int k);

struct CollisionResult {
  int k = 0;
  Family family = Family::X;
  Complex value;     // s_k or t_k
  Complex rescaled;  // u = a^(2k) value
  double residual = 0.0;
  int newton_iters = 0;
  std::vector<Complex> branch_hints;
};

struct CollisionOptions {
  double tol = 1e-10;
  int max_iter = 60;
  TrackOptions track;
};

CollisionResult solve_collision(const lattes::LattesInstance& instance, const MarkedPreperiodicPoint& marked,
                                const CollisionOptions& options = {});
// Secant directly in t; for cross-checking at small k.
CollisionResult solve_collision_naive(const lattes::LattesInstance& instance, const MarkedPreperiodicPoint& marked,
                                      const CollisionOptions& options = {});

struct CertifyOptions {
  int max_iter = 400;
  double tol = 1e-8;
  double cluster = 1e-6;
};

struct CertifyReport {
  std::vector<SpherePoint> critical_values;
  std::vector<dynamics::OrbitCertificate> certificates;
  int postcritical_count = 0;
  bool lattes_witness = false;      // exactly four postcritical points
  bool non_lattes_witness = false;  // more than four
};

// Distinct images of the critical points.
std::vector<SpherePoint> critical_value_set(const RationalMapCoeffs& g, double tol = kDefaultTol,
                                            double cluster = 1e-6);

// Throws NotPCF when an orbit does not land (or only converges to an
// attracting cycle) and NotRepelling when it lands exactly on a
// non-repelling cycle.
CertifyReport certify_strictly_pcf(const RationalMapCoeffs& g, const std::vector<SpherePoint>& crit_values,
                                   const CertifyOptions& options = {});

struct ConstructOptions {
  double tol = 1e-10;
  int max_iter = 40;
  lattes::BuildOptions build;
  CollisionOptions collision;
  CertifyOptions certify;
};

struct ConstructionResult {
  int k = 0;
  Complex gamma0;
  Complex gamma_k;
  Complex r_k;
  CollisionResult s;
  CollisionResult t;
  RationalMapCoeffs g_k;
  RationalMapCoeffs f_base;
  CertifyReport certificate;
  double distance_to_base = 0.0;
  double ratio_residual = 0.0;
  // Chordal distance between the tracked x_k and (1 + r_k) v at gamma_k.
  double collision_gap = 0.0;
  // Projective distance between the coefficient vectors of g_k and f_{gamma0}.
  double map_distance = 0.0;
  int iterations = 0;
  bool degenerate_marking = false;
};

// Secant in gamma on s_k/t_k - 1, then g_k = (1 + r_k) f_{gamma_k} and its
// certificate.
ConstructionResult solve_gamma_k(const lattes::LattesSpec& spec0, const RationalPair& pair, int k,
                                 const ConstructOptions& options = {});

struct TableRow {
  int k = 0;
  bool ok = false;
  std::string error;
  std::optional<ErrorCode> error_code;
  Complex s_k, t_k, u_x, u_y;
  Complex ratio;   // s_k / t_k at gamma0
  Complex target;  // -sigma^2 / tau^2
  double deviation = 0.0;
  // Deviation of a^(2k) s_k / sigma^2 from its limit -lambda / (c v).
  double rescaled_deviation = 0.0;
  bool constructed = false;
  Complex gamma_k, r_k;
  double gamma_distance = 0.0;
  bool certified = false;
  int postcritical_count = 0;
  // Deviation smaller than in the previous row (only from k = 3 on).
  bool converging = false;
};

struct ConvergenceTable {
  std::vector<TableRow> rows;
  bool monotone = false;
};

ConvergenceTable convergence_table(const lattes::LattesSpec& spec0, const RationalPair& pair, int k_min, int k_max,
                                   const ConstructOptions& options = {}, bool construct = true, int threads = 1);

}  // namespace lattes_forge::perturbation
