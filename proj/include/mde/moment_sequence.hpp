#pragma once

// Moment sequences m = (m_p) and their structural diagnostics.
//
// Values are kept in log-domain; Gamma(1 + alpha p) overflows a double near
// p = 170 / alpha, q^(p^2) much earlier.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mde/detail/fit.hpp"
#include "mde/errors.hpp"
#include "mde/rational.hpp"

namespace mde {

enum class SequenceKind { factorial, gevrey, gamma_moment, q_gevrey, custom };

// How a custom table continues past its last entry.
enum class ExtensionRule {
  none,            // reading past the table throws out_of_range_error
  constant_ratio,  // m_p / m_{p-1} frozen at the last tabulated ratio
  linear_ratio,    // m_p / m_{p-1} grows linearly in p from the last tabulated ratio
};

inline std::string to_string(SequenceKind k) {
  switch (k) {
    case SequenceKind::factorial: return "factorial";
    case SequenceKind::gevrey: return "gevrey";
    case SequenceKind::gamma_moment: return "gamma_moment";
    case SequenceKind::q_gevrey: return "q_gevrey";
    case SequenceKind::custom: return "custom";
  }
  return "unknown";
}

class MomentSequence {
 public:
  /// m_p = scale * p!
  static MomentSequence factorial(double scale = 1.0) {
    MomentSequence s(SequenceKind::factorial, scale);
    return s;
  }

  /// m_p = scale * (p!)^alpha
  static MomentSequence gevrey(Rational alpha, double scale = 1.0) {
    MomentSequence s(SequenceKind::gevrey, scale);
    s.alpha_ = check_alpha(alpha);
    return s;
  }

  /// m_p = scale * Gamma(1 + alpha p)
  static MomentSequence gamma_moment(Rational alpha, double scale = 1.0) {
    MomentSequence s(SequenceKind::gamma_moment, scale);
    s.alpha_ = check_alpha(alpha);
    return s;
  }

  /// m_p = scale * q^(p^2), q > 1
  static MomentSequence q_gevrey(double q, double scale = 1.0) {
    if (!(q > 1.0) || !std::isfinite(q)) throw invalid_input("q_gevrey requires finite q > 1");
    MomentSequence s(SequenceKind::q_gevrey, scale);
    s.q_ = q;
    s.log_q_ = std::log(q);
    return s;
  }

  /// Tabulated values m_0, m_1, ... taken as given (no normalization).
  static MomentSequence custom(std::vector<double> values, ExtensionRule rule = ExtensionRule::none) {
    if (values.empty()) throw invalid_input("custom moment table is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw invalid_input("custom moment value at index " + std::to_string(i) + " is not a positive finite number");
    }
    if (rule != ExtensionRule::none && values.size() < 2)
      throw invalid_input("custom extension rule needs at least two tabulated values");
    MomentSequence s(SequenceKind::custom, 1.0);
    s.rule_ = rule;
    s.log_table_.reserve(values.size());
    for (double v : values) s.log_table_.push_back(std::log(v));
    s.table_ = std::move(values);
    return s;
  }

  SequenceKind kind() const noexcept { return kind_; }
  Rational alpha() const noexcept { return alpha_; }
  double q() const noexcept { return q_; }
  double scale() const noexcept { return scale_; }
  ExtensionRule extension() const noexcept { return rule_; }
  const std::vector<double>& table() const noexcept { return table_; }

  // Number of indices that can be evaluated; nullopt when unbounded.
  std::optional<std::size_t> available() const noexcept {
    if (kind_ == SequenceKind::custom && rule_ == ExtensionRule::none) return table_.size();
    return std::nullopt;
  }

  double log_value(std::size_t p) const {
    const double pd = static_cast<double>(p);
    switch (kind_) {
      case SequenceKind::factorial: return std::lgamma(pd + 1.0) + log_scale_;
      case SequenceKind::gevrey: return alpha_.value() * std::lgamma(pd + 1.0) + log_scale_;
      case SequenceKind::gamma_moment: return std::lgamma(1.0 + alpha_.value() * pd) + log_scale_;
      case SequenceKind::q_gevrey: return pd * pd * log_q_ + log_scale_;
      case SequenceKind::custom: return custom_log_value(p);
    }
    return 0.0;
  }

  double value(std::size_t p) const { return std::exp(log_value(p)); }

  /// m_p / m_{p-1}, p >= 1. Closed forms where available so that integer
  /// ratios (factorial, integer Gevrey orders) are exact.
  double ratio(std::size_t p) const {
    if (p == 0) throw invalid_input("ratio(p) requires p >= 1");
    const double pd = static_cast<double>(p);
    switch (kind_) {
      case SequenceKind::factorial: return pd;
      case SequenceKind::gevrey: return std::pow(pd, alpha_.value());
      case SequenceKind::gamma_moment: {
        const double a = alpha_.value();
        return std::exp(std::lgamma(1.0 + a * pd) - std::lgamma(1.0 + a * (pd - 1.0)));
      }
      case SequenceKind::q_gevrey: return std::pow(q_, 2.0 * pd - 1.0);
      case SequenceKind::custom:
        if (p < table_.size()) return table_[p] / table_[p - 1];
        return std::exp(custom_log_value(p) - custom_log_value(p - 1));
    }
    return 1.0;
  }

  /// Order of the kernel E(z) = sum z^p / m_p when it is a classical kernel
  /// moment sequence (factorial, Gamma(1 + alpha p)); 1/alpha.
  std::optional<double> kernel_order() const noexcept {
    switch (kind_) {
      case SequenceKind::factorial: return 1.0;
      case SequenceKind::gamma_moment: return 1.0 / alpha_.value();
      default: return std::nullopt;
    }
  }

 private:
  MomentSequence(SequenceKind k, double scale) : kind_(k), scale_(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw invalid_input("moment sequence scale must be positive");
    log_scale_ = std::log(scale);
  }

  static Rational check_alpha(Rational a) {
    if (a.num <= 0 || a.den <= 0) throw invalid_input("alpha must be a positive rational, got " + a.str());
    return a;
  }

  double custom_log_value(std::size_t p) const {
    const std::size_t n = table_.size();
    if (p < n) return log_table_[p];
    if (rule_ == ExtensionRule::none) throw out_of_range_error(p, n);
    const double last_log_ratio = log_table_[n - 1] - log_table_[n - 2];
    const double steps = static_cast<double>(p - (n - 1));
    switch (rule_) {
      case ExtensionRule::none: break;
      case ExtensionRule::constant_ratio: return log_table_[n - 1] + steps * last_log_ratio;
      case ExtensionRule::linear_ratio: {
        // ratio(k) = last_ratio * k / (n - 1) for k >= n
        const double base = static_cast<double>(n - 1);
        return log_table_[n - 1] + steps * (last_log_ratio - std::log(base)) +
               std::lgamma(static_cast<double>(p) + 1.0) - std::lgamma(static_cast<double>(n));
      }
    }
    return 0.0;
  }

  SequenceKind kind_;
  double scale_ = 1.0;
  double log_scale_ = 0.0;
  Rational alpha_{1, 1};
  double q_ = 0.0;
  double log_q_ = 0.0;
  ExtensionRule rule_ = ExtensionRule::none;
  std::vector<double> table_;
  std::vector<double> log_table_;
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

enum class AssumptionPath { A, B, none };

inline std::string to_string(AssumptionPath p) {
  switch (p) {
    case AssumptionPath::A: return "A";
    case AssumptionPath::B: return "B";
    case AssumptionPath::none: return "none";
  }
  return "none";
}

struct AssumptionAReport {
  bool holds_on_window = false;
  double C_estimate = std::numeric_limits<double>::infinity();
};

struct AssumptionBReport {
  bool holds_on_window = false;
  Rational alpha_estimate{1, 2};
  double alpha_fit = 0.0;  // raw least-squares slope before snapping
  double C_estimate = std::numeric_limits<double>::infinity();
};

struct SequenceDiagnostics {
  AssumptionAReport assumption_A;
  AssumptionBReport assumption_B;
  bool lc_ok = false;
  bool mg_ok = false;
  double A1_estimate = 0.0;
  bool snq_partial_ok = false;
  double A2_estimate = 0.0;
  std::size_t probe_window = 0;

  // (A) wins ties: it keeps the full radius.
  AssumptionPath preferred() const noexcept {
    if (assumption_A.holds_on_window) return AssumptionPath::A;
    if (assumption_B.holds_on_window) return AssumptionPath::B;
    return AssumptionPath::none;
  }

  // max{1, C} for the preferred path.
  double C_tilde() const noexcept {
    switch (preferred()) {
      case AssumptionPath::A: return std::max(1.0, assumption_A.C_estimate);
      case AssumptionPath::B: return std::max(1.0, assumption_B.C_estimate);
      case AssumptionPath::none: break;
    }
    return std::max(1.0, assumption_A.C_estimate);
  }
};

namespace detail {

inline constexpr double trend_slack = 1.05;

// values[i] belongs to index i + 1. Bounded when the last quartile does not
// exceed the first three quartiles by more than 5%.
inline bool bounded_trend(const std::vector<double>& values) {
  if (values.size() < 4) return false;
  const std::size_t split = (3 * values.size()) / 4;
  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) return false;
    (i < split ? early : late) = std::max(i < split ? early : late, values[i]);
  }
  return late <= trend_slack * early;
}

inline Rational snap_alpha(double a) {
  for (std::int64_t den = 1; den <= 12; ++den) {
    const auto num = static_cast<std::int64_t>(std::llround(a * static_cast<double>(den)));
    if (num > 0 && std::fabs(static_cast<double>(num) / static_cast<double>(den) - a) <= 0.02)
      return make_rational(num, den);
  }
  return make_rational(std::max<std::int64_t>(1, std::llround(a * 100.0)), 100);
}

inline double gamma_ratio_alpha(double alpha, std::size_t p) {
  const double pd = static_cast<double>(p);
  return std::exp(std::lgamma(1.0 + alpha * pd) - std::lgamma(1.0 + alpha * (pd - 1.0)));
}

}  // namespace detail

/// Probes assumptions (A), (B) and the strong-regularity conditions on the
/// window 1 <= p <= P. Custom tables clamp the window to what is tabulated.
inline SequenceDiagnostics diagnose(const MomentSequence& seq, std::size_t P) {
  if (P < 8) throw invalid_input("diagnose requires a probe window P >= 8");
  if (auto avail = seq.available()) {
    if (*avail < 10) throw invalid_input("custom moment table too short to diagnose (need at least 10 values)");
    P = std::min(P, *avail - 2);
  }
  SequenceDiagnostics d;
  d.probe_window = P;

  std::vector<double> ratios(P + 1, 0.0);
  for (std::size_t p = 1; p <= P; ++p) ratios[p] = seq.ratio(p);

  // (A): m_p/m_{p-1} >= p/C
  {
    std::vector<double> v;
    v.reserve(P);
    for (std::size_t p = 1; p <= P; ++p) v.push_back(static_cast<double>(p) / ratios[p]);
    d.assumption_A.C_estimate = *std::max_element(v.begin(), v.end());
    d.assumption_A.holds_on_window = detail::bounded_trend(v);
  }

  // (B): m_p/m_{p-1} >= Gamma(1+a p)/Gamma(1+a(p-1)) / C
  {
    // upper half of the window: low-p curvature of Gamma ratios biases the slope
    std::vector<detail::Point> pts;
    for (std::size_t p = std::max<std::size_t>(P / 2, 1); p <= P; ++p)
      pts.push_back({std::log(static_cast<double>(p)), std::log(ratios[p])});
    const double fit = detail::slope(pts);
    d.assumption_B.alpha_fit = fit;
    Rational a = detail::snap_alpha(std::clamp(fit, 0.01, 0.99));
    if (a.value() >= 1.0) a = make_rational(99, 100);
    if (a.value() < 0.01) a = make_rational(1, 100);
    d.assumption_B.alpha_estimate = a;
    std::vector<double> v;
    v.reserve(P);
    for (std::size_t p = 1; p <= P; ++p) v.push_back(detail::gamma_ratio_alpha(a.value(), p) / ratios[p]);
    d.assumption_B.C_estimate = *std::max_element(v.begin(), v.end());
    d.assumption_B.holds_on_window = detail::bounded_trend(v);
  }

  // (lc): ratio nondecreasing <=> M_p^2 <= M_{p-1} M_{p+1}
  {
    d.lc_ok = true;
    for (std::size_t p = 1; p < P; ++p) {
      if (ratios[p] > ratios[p + 1] * (1.0 + 1e-12)) {
        d.lc_ok = false;
        break;
      }
    }
  }

  // (mg): a_s = max_{p+q=s} (L_s - L_p - L_q)/s, A1 = exp(sup a_s)
  {
    std::vector<double> L(P + 1);
    for (std::size_t p = 0; p <= P; ++p) L[p] = seq.log_value(p) - seq.log_value(0);
    std::vector<double> a;
    a.reserve(P);
    for (std::size_t s = 1; s <= P; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p <= s; ++p) best = std::max(best, (L[s] - L[p] - L[s - p]) / static_cast<double>(s));
      a.push_back(best);
    }
    d.A1_estimate = std::exp(*std::max_element(a.begin(), a.end()));
    std::vector<double> ea;
    ea.reserve(a.size());
    for (double x : a) ea.push_back(std::exp(x));
    d.mg_ok = detail::bounded_trend(ea) && std::isfinite(d.A1_estimate);
  }

  // (snq), truncated at q = 4P: sum_{q>=p} M_q/((q+1) M_{q+1}) <= A2 M_p/M_{p+1}
  {
    std::size_t tail_end = 4 * P;
    if (auto avail = seq.available()) tail_end = std::min(tail_end, *avail - 2);
    std::vector<double> inv(tail_end + 2, 0.0);
    for (std::size_t q = 0; q <= tail_end; ++q)
      inv[q] = 1.0 / (static_cast<double>(q + 1) * seq.ratio(q + 1));
    std::vector<double> suffix(tail_end + 2, 0.0);
    for (std::size_t q = tail_end + 1; q-- > 0;) suffix[q] = suffix[q + 1] + inv[q];
    std::vector<double> v;
    v.reserve(P);
    for (std::size_t p = 1; p <= P; ++p) v.push_back(suffix[p] * seq.ratio(p + 1));
    d.A2_estimate = std::max(suffix[0] * seq.ratio(1), *std::max_element(v.begin(), v.end()));
    d.snq_partial_ok = detail::bounded_trend(v) && std::isfinite(d.A2_estimate);
  }
  return d;
}

/// M(t) = sup_p log(t^p / m_p), M(0) = 0. The probed range doubles until the
/// maximizer sits in the lower half.
inline double eval_M(const MomentSequence& seq, double t) {
  if (!std::isfinite(t)) throw invalid_input("eval_M requires a finite argument");
  if (t < 0.0) throw invalid_input("eval_M requires t >= 0");
  if (t == 0.0) return 0.0;
  const double lt = std::log(t);
  const double l0 = seq.log_value(0);
  std::size_t limit = 16;
  const std::size_t hard_cap = seq.available() ? *seq.available() - 1 : (std::size_t{1} << 22);
  for (;;) {
    const std::size_t top = std::min(limit, hard_cap);
    double best = 0.0;
    std::size_t arg = 0;
    for (std::size_t p = 0; p <= top; ++p) {
      const double v = static_cast<double>(p) * lt - (seq.log_value(p) - l0);
      if (v > best) {
        best = v;
        arg = p;
      }
    }
    if (arg < top / 2 || top == hard_cap) return best;
    limit *= 2;
  }
}

}  // namespace mde
