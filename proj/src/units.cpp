#include "resus/units.hpp"

#include <charconv>
#include <cmath>

namespace resus {

Milligrams Milligrams::parse(std::string_view text) {
  auto fail = [&] { return std::invalid_argument("invalid milligram amount: '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();

  auto dot = text.find('.');
  std::string_view whole_part = text.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole_part.empty() || frac_part.size() > 3) throw fail();
  if (dot != std::string_view::npos && frac_part.empty()) throw fail();

  std::int64_t whole = 0;
  auto [p, ec] = std::from_chars(whole_part.data(), whole_part.data() + whole_part.size(), whole);
  if (ec != std::errc{} || p != whole_part.data() + whole_part.size() || whole < 0) throw fail();

  std::int64_t frac = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    frac *= 10;
    if (i < frac_part.size()) {
      char c = frac_part[i];
      if (c < '0' || c > '9') throw fail();
      frac += c - '0';
    }
  }
  return from_micrograms(whole * kMicrogramsPerMg + frac);
}

Milligrams Milligrams::from_double(double mg) {
  if (!std::isfinite(mg)) throw std::invalid_argument("milligram amount must be finite");
  return from_micrograms(static_cast<std::int64_t>(std::llround(mg * kMicrogramsPerMg)));
}

std::string Milligrams::to_string() const {
  std::int64_t abs_ug = ug_ < 0 ? -ug_ : ug_;
  std::string out = ug_ < 0 ? "-" : "";
  out += std::to_string(abs_ug / kMicrogramsPerMg);
  std::int64_t frac = abs_ug % kMicrogramsPerMg;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 3 - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    out += '.' + digits;
  }
  return out;
}

}  // namespace resus
