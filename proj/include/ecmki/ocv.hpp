#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ecmki {

// Open-circuit voltage as a function of a normalized argument in [0, 1]
// (state of charge for the Thevenin model, diffusion surface voltage for
// the double-capacitor model). The curve must be strictly increasing on
// [0, 1]; outside that range it extrapolates linearly with the slope of
// the nearest endpoint/segment.
class OcvCurve {
 public:
  static OcvCurve polynomial(std::vector<double> coefficients) {
    if (coefficients.empty())
      throw std::invalid_argument("OCV polynomial needs at least one coefficient");
    OcvCurve c;
    c.repr_ = Poly{std::move(coefficients)};
    c.validate_monotone();
    return c;
  }

  // Breakpoint table (s_j, v_j) with linear interpolation between points.
  static OcvCurve table(std::vector<double> s, std::vector<double> v) {
    if (s.size() != v.size())
      throw std::invalid_argument("OCV table: argument and voltage lists differ in length");
    if (s.size() < 2)
      throw std::invalid_argument("OCV table needs at least two breakpoints");
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (!(s[i] > s[i - 1]))
        throw std::invalid_argument("OCV table: breakpoints must be strictly increasing");
      if (!(v[i] > v[i - 1]))
        throw std::invalid_argument("OCV curve must be strictly increasing on [0, 1]");
    }
    OcvCurve c;
    c.repr_ = Table{std::move(s), std::move(v)};
    return c;
  }

  double operator()(double s) const {
    if (const auto* p = std::get_if<Poly>(&repr_)) {
      if (s < 0.0) return poly_value(p->coeffs, 0.0) + poly_slope(p->coeffs, 0.0) * s;
      if (s > 1.0) return poly_value(p->coeffs, 1.0) + poly_slope(p->coeffs, 1.0) * (s - 1.0);
      return poly_value(p->coeffs, s);
    }
    const auto& t = std::get<Table>(repr_);
    // Segment index clamped to the ends; extends the end segments linearly.
    std::size_t hi = std::upper_bound(t.s.begin(), t.s.end(), s) - t.s.begin();
    std::size_t j = std::clamp<std::size_t>(hi, 1, t.s.size() - 1) - 1;
    const double slope = (t.v[j + 1] - t.v[j]) / (t.s[j + 1] - t.s[j]);
    return t.v[j] + slope * (s - t.s[j]);
  }

  // Endpoint check against the cell's operating voltage window.
  void require_window(double v_min, double v_max) const {
    const double lo = (*this)(0.0);
    const double hi = (*this)(1.0);
    if (lo < v_min || lo > v_max || hi < v_min || hi > v_max)
      throw std::invalid_argument(
          "OCV endpoints [" + std::to_string(lo) + ", " + std::to_string(hi) +
          "] outside the voltage window [" + std::to_string(v_min) + ", " +
          std::to_string(v_max) + "]");
  }

  // Canonical text form, used for config hashing and provenance.
  std::string describe() const {
    std::string out;
    char buf[32];
    auto push = [&](double v) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.append(buf, res.ptr);
    };
    if (const auto* p = std::get_if<Poly>(&repr_)) {
      out = "poly[";
      for (std::size_t i = 0; i < p->coeffs.size(); ++i) {
        if (i) out += ',';
        push(p->coeffs[i]);
      }
    } else {
      const auto& t = std::get<Table>(repr_);
      out = "table[";
      for (std::size_t i = 0; i < t.s.size(); ++i) {
        if (i) out += ',';
        push(t.s[i]);
        out += ':';
        push(t.v[i]);
      }
    }
    out += ']';
    return out;
  }

 private:
  struct Poly {
    std::vector<double> coeffs;  // ascending powers
  };
  struct Table {
    std::vector<double> s;
    std::vector<double> v;
  };

  OcvCurve() = default;

  static double poly_value(const std::vector<double>& c, double s) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * s + c[i];
    return acc;
  }

  static double poly_slope(const std::vector<double>& c, double s) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) acc = acc * s + c[i] * static_cast<double>(i);
    return acc;
  }

  void validate_monotone() const {
    const auto& c = std::get<Poly>(repr_).coeffs;
    // Dense slope scan; adequate for the low-order curves used in practice.
    constexpr int kGrid = 1024;
    for (int i = 0; i <= kGrid; ++i) {
      const double s = static_cast<double>(i) / kGrid;
      if (!(poly_slope(c, s) > 0.0))
        throw std::invalid_argument("OCV curve must be strictly increasing on [0, 1]");
    }
  }

  std::variant<Poly, Table> repr_;
};

inline double ocv_eval(const OcvCurve& curve, double s) { return curve(s); }

}  // namespace ecmki
