#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lattes_forge/elliptic.hpp"
#include "lattes_forge/rational_map.hpp"

namespace lattes_forge::lattes {

// L(tau) = a tau + b with b = 0 (a even or odd) or b = (1 + gamma)/2 (a odd).
enum class CaseTag { EvenZero = 1, OddZero = 2, OddHalf = 3 };

CaseTag case_from_int(int tag);
std::string_view to_string(CaseTag tag) noexcept;

inline constexpr int kMaxDegree = 25;

class LattesSpec {
 public:
  // Throws InvalidArgument unless |a| >= 2, a has the parity the case needs
  // and a^2 <= max_degree.
  LattesSpec(elliptic::TorusParameter gamma, int a, CaseTag case_tag, int max_degree = kMaxDegree);

  const elliptic::TorusParameter& gamma() const noexcept { return gamma_; }
  int a() const noexcept { return a_; }
  CaseTag case_tag() const noexcept { return case_; }
  int degree() const noexcept { return a_ * a_; }
  // b in lattice coordinates.
  elliptic::RationalTorusPoint translation() const;

 private:
  elliptic::TorusParameter gamma_;
  int a_;
  CaseTag case_;
};

elliptic::TorusPoint torus_endo(const LattesSpec& spec, elliptic::TorusPoint tau);
elliptic::RationalTorusPoint torus_endo(const LattesSpec& spec, const elliptic::RationalTorusPoint& tau);

struct BuildOptions {
  int oversample = 3;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  int holdout = 100;
};

struct BuildDiagnostics {
  double smallest_singular_value = 0.0;
  double second_singular_value = 0.0;
  double holdout_residual = 0.0;
  int samples = 0;
};

// Least-squares recovery of f from f(Theta(tau_j)) = Theta(L(tau_j)).
// Throws IllConditioned when the null direction is not isolated and
// ValidationFailed when the held-out residual reaches tol.
RationalMapCoeffs build_rational_map(const LattesSpec& spec, const BuildOptions& options = {},
                                     BuildDiagnostics* diagnostics = nullptr);
RationalMapCoeffs build_rational_map(const LattesSpec& spec, const elliptic::Theta& theta,
                                     const BuildOptions& options = {}, BuildDiagnostics* diagnostics = nullptr);

std::vector<SpherePoint> critical_values(const LattesSpec& spec);
// {0, infinity, v, w}.
std::vector<SpherePoint> postcritical_set(const LattesSpec& spec);

// Largest chordal distance between f(Theta(tau)) and Theta(L(tau)) over n
// random torus points.
double verify_semiconjugacy(const RationalMapCoeffs& f, const LattesSpec& spec, int n, std::uint64_t seed = 7);

// Everything downstream needs about one Lattes map.
struct LattesInstance {
  LattesSpec spec;
  elliptic::ThetaData theta;
  RationalMapCoeffs map;

  static LattesInstance build(const LattesSpec& spec, double tol = kDefaultTol, const BuildOptions& options = {});
};

}  // namespace lattes_forge::lattes
