#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace bridgeintent {

/// Every number written by the CLI and the session service goes through
/// here: 9 significant digits, shortest form.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

/// x rounded to the printed precision.
inline double round_number(double x) {
  if (!std::isfinite(x)) return x;
  // strtod, not stod: subnormal posteriors must not throw
  return std::strtod(format_number(x).c_str(), nullptr);
}

}  // namespace bridgeintent
