#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace pcic {

struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;  // M-1 denominator
  double se = 0.0;  // sd / sqrt(count)
  std::size_t count = 0;
};

inline SampleSummary summarize(std::span<const double> values) {
  SampleSummary out;
  out.count = values.size();
  if (values.empty()) {
    out.mean = out.sd = out.se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    out.sd = out.se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  out.se = out.sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

}  // namespace pcic
