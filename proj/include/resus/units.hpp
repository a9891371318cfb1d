#pragma once

// Exact quantities used by the protocol engine: non-negative nanosecond
// durations and fixed-point milligram doses.

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace resus {

class Duration {
 public:
  constexpr Duration() = default;

  static constexpr Duration from_nanos(std::int64_t nanos) {
    if (nanos < 0) throw std::invalid_argument("Duration must be non-negative");
    Duration d;
    d.nanos_ = nanos;
    return d;
  }
  static constexpr Duration from_seconds(std::int64_t seconds) {
    return from_nanos(seconds * 1'000'000'000);
  }
  static constexpr Duration from_millis(std::int64_t millis) {
    return from_nanos(millis * 1'000'000);
  }
  template <class Rep, class Period>
  static constexpr Duration from_chrono(std::chrono::duration<Rep, Period> d) {
    return from_nanos(std::chrono::duration_cast<std::chrono::nanoseconds>(d).count());
  }

  constexpr std::int64_t nanos() const { return nanos_; }
  constexpr std::chrono::nanoseconds chrono() const { return std::chrono::nanoseconds{nanos_}; }
  constexpr bool whole_seconds() const { return nanos_ % 1'000'000'000 == 0; }
  constexpr std::int64_t seconds() const { return nanos_ / 1'000'000'000; }

  constexpr Duration operator+(Duration o) const { return from_nanos(nanos_ + o.nanos_); }
  // Saturates at zero.
  constexpr Duration saturating_sub(Duration o) const {
    return nanos_ > o.nanos_ ? from_nanos(nanos_ - o.nanos_) : Duration{};
  }

  constexpr auto operator<=>(const Duration&) const = default;

 private:
  std::int64_t nanos_ = 0;
};

namespace literals {
constexpr Duration operator""_s(unsigned long long s) {
  return Duration::from_seconds(static_cast<std::int64_t>(s));
}
constexpr Duration operator""_ms(unsigned long long ms) {
  return Duration::from_millis(static_cast<std::int64_t>(ms));
}
}  // namespace literals

// Dose amount held as an integer count of micrograms so sums are exact.
class Milligrams {
 public:
  static constexpr std::int64_t kMicrogramsPerMg = 1000;

  constexpr Milligrams() = default;

  static constexpr Milligrams from_micrograms(std::int64_t ug) {
    Milligrams m;
    m.ug_ = ug;
    return m;
  }
  static constexpr Milligrams whole(std::int64_t mg) { return from_micrograms(mg * kMicrogramsPerMg); }

  // Accepts "1", "150", "0.5", "1.25". At most three fractional digits.
  static Milligrams parse(std::string_view text);

  // Rounds to the nearest microgram; used for JSON numbers.
  static Milligrams from_double(double mg);

  constexpr std::int64_t micrograms() const { return ug_; }
  constexpr bool is_whole() const { return ug_ % kMicrogramsPerMg == 0; }
  double as_double() const { return static_cast<double>(ug_) / kMicrogramsPerMg; }

  // Decimal text without trailing zeros: 1, 1.5, 450, 0.125.
  std::string to_string() const;

  constexpr Milligrams operator+(Milligrams o) const { return from_micrograms(ug_ + o.ug_); }
  constexpr Milligrams& operator+=(Milligrams o) {
    ug_ += o.ug_;
    return *this;
  }
  constexpr Milligrams operator*(std::int64_t k) const { return from_micrograms(ug_ * k); }

  constexpr auto operator<=>(const Milligrams&) const = default;

 private:
  std::int64_t ug_ = 0;
};

}  // namespace resus
