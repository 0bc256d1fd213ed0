#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>
#include <string_view>

#include "memcost/core/error.hpp"

namespace memcost {

namespace detail {

// Integer division rounded half-to-even. den must be positive.
inline std::int64_t div_round_half_even(__int128 num, __int128 den) {
  __int128 q = num / den;
  __int128 r = num % den;
  if (r < 0) {
    r += den;
    q -= 1;
  }
  const __int128 twice = 2 * r;
  if (twice > den || (twice == den && (q % 2 != 0))) {
    q += 1;
  }
  return static_cast<std::int64_t>(q);
}

}  // namespace detail

/// US dollars held as an exact count of micro-dollars (1e-6 USD).
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }

  /// Parses "0.0261", "$0.0261" or "-1.5". At most six fractional digits.
  static Money parse(std::string_view text) {
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      negative = s.front() == '-';
      s.remove_prefix(1);
    }
    if (!s.empty() && s.front() == '$') s.remove_prefix(1);
    if (s.empty()) throw InvalidInput("empty money literal");
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool any_digit = false;
    for (char c : s) {
      if (c == '.') {
        if (seen_dot) throw InvalidInput("malformed money literal '" + std::string(text) + "'");
        seen_dot = true;
      } else if (c >= '0' && c <= '9') {
        any_digit = true;
        if (seen_dot) {
          if (++frac_digits > 6) throw InvalidInput("more than 6 decimals in '" + std::string(text) + "'");
          frac = frac * 10 + (c - '0');
        } else {
          whole = whole * 10 + (c - '0');
        }
      } else {
        throw InvalidInput("malformed money literal '" + std::string(text) + "'");
      }
    }
    if (!any_digit) throw InvalidInput("malformed money literal '" + std::string(text) + "'");
    for (int i = frac_digits; i < 6; ++i) frac *= 10;
    const std::int64_t micros = whole * 1'000'000 + frac;
    return Money(negative ? -micros : micros);
  }

  constexpr std::int64_t micros() const { return micros_; }

  double to_double() const { return static_cast<double>(micros_) / 1e6; }

  /// Rounds half-even to the given number of decimals (0..6).
  Money rounded(int decimals) const {
    if (decimals < 0 || decimals > 6) throw InvalidInput("decimals must be in [0, 6]");
    std::int64_t unit = 1;
    for (int i = decimals; i < 6; ++i) unit *= 10;
    return Money(detail::div_round_half_even(micros_, unit) * unit);
  }

  /// Fixed-point rendering without a currency sign, e.g. "0.0261".
  std::string to_string(int decimals = 6) const {
    const Money r = rounded(decimals);
    std::int64_t v = r.micros_;
    const bool negative = v < 0;
    if (negative) v = -v;
    std::string out = std::to_string(v / 1'000'000);
    if (decimals > 0) {
      std::string frac = std::to_string(v % 1'000'000);
      frac.insert(0, 6 - frac.size(), '0');
      out += '.';
      out += frac.substr(0, static_cast<std::size_t>(decimals));
    }
    return negative ? "-" + out : out;
  }

  /// "$0.0261" / "-$0.0020"
  std::string to_usd(int decimals = 4) const {
    std::string s = to_string(decimals);
    if (!s.empty() && s.front() == '-') return "-$" + s.substr(1);
    return "$" + s;
  }

  constexpr Money& operator+=(Money o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return Money(a.micros_ + b.micros_); }
  friend constexpr Money operator-(Money a, Money b) { return Money(a.micros_ - b.micros_); }
  friend constexpr Money operator-(Money a) { return Money(-a.micros_); }
  friend constexpr Money operator*(Money a, std::int64_t n) { return Money(a.micros_ * n); }
  friend constexpr Money operator*(std::int64_t n, Money a) { return Money(a.micros_ * n); }
  friend constexpr auto operator<=>(Money, Money) = default;

  friend std::ostream& operator<<(std::ostream& os, Money m) { return os << m.to_usd(6); }

 private:
  constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

/// Price per one million tokens, exact in micro-dollars.
class Rate {
 public:
  constexpr Rate() = default;
  static constexpr Rate per_million(Money m) { return Rate(m); }
  static Rate usd_per_million(std::string_view usd) { return Rate(Money::parse(usd)); }

  constexpr Money per_million() const { return per_million_; }

  /// Charge for `tokens` tokens, rounded half-even to the micro-dollar.
  Money charge(std::int64_t tokens) const {
    return Money::from_micros(detail::div_round_half_even(
        static_cast<__int128>(tokens) * per_million_.micros(), 1'000'000));
  }

  /// Rate scaled by num/den, rounded half-even (used for cache discounts).
  Rate scaled(std::int64_t num, std::int64_t den) const {
    return Rate(Money::from_micros(
        detail::div_round_half_even(static_cast<__int128>(per_million_.micros()) * num, den)));
  }

  friend constexpr auto operator<=>(Rate, Rate) = default;

 private:
  constexpr explicit Rate(Money m) : per_million_(m) {}
  Money per_million_;
};

}  // namespace memcost
