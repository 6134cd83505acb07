#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ecmki/common.hpp"

namespace ecmki {

struct BoxplotStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

// Linear-interpolation quantile (the common "type 7" rule) on sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw SolverError("quantile of an empty sample");
  if (n == 1) return sorted[0];
  const double pos = p * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Quartiles plus 1.5 IQR whiskers; points beyond the whiskers are
// reported as outliers.
inline BoxplotStats boxplot_stats(std::vector<double> values) {
  if (values.empty()) throw SolverError("boxplot of an empty sample");
  std::sort(values.begin(), values.end());
  BoxplotStats st;
  st.q1 = sorted_quantile(values, 0.25);
  st.median = sorted_quantile(values, 0.5);
  st.q3 = sorted_quantile(values, 0.75);
  const double iqr = st.q3 - st.q1;
  const double lo_fence = st.q1 - 1.5 * iqr;
  const double hi_fence = st.q3 + 1.5 * iqr;
  st.whisker_low = st.q3;
  st.whisker_high = st.q1;
  bool any_in = false;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      st.outliers.push_back(v);
    } else {
      if (!any_in) {
        st.whisker_low = v;
        st.whisker_high = v;
        any_in = true;
      } else {
        st.whisker_low = std::min(st.whisker_low, v);
        st.whisker_high = std::max(st.whisker_high, v);
      }
    }
  }
  if (!any_in) {
    st.whisker_low = st.q1;
    st.whisker_high = st.q3;
  }
  return st;
}

}  // namespace ecmki
