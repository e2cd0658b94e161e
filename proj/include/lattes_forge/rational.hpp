#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace lattes_forge {

// Exact rational p/q, always reduced with q > 0.  Arithmetic is checked:
// results that do not fit in 64 bits throw InvalidArgument.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  // Accepts "p/q", "p" or "-p/q"; whitespace around the tokens is allowed.
  static Rational parse(std::string_view text);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  // Representative of this value modulo 1 in [0, 1).
  Rational frac() const;
  bool is_integer() const noexcept { return den_ == 1; }

  // True when gcd(den, n) == 1.
  bool denominator_coprime_with(std::int64_t n) const noexcept;

  Rational operator-() const;
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  struct Reduced {};
  constexpr Rational(std::int64_t num, std::int64_t den, Reduced) : num_(num), den_(den) {}
  friend Rational make_reduced(std::int64_t num, std::int64_t den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace lattes_forge
