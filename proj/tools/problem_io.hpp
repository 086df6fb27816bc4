#pragma once

// Problem-file parsing and report serialization for the mde command line.
// Every validation error names the offending JSON location, e.g. $.A[1][0][2].

#include <algorithm>
#include <charconv>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mde/mde.hpp"

namespace mde::cli {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw invalid_input(path + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw invalid_input(path + "." + it.key() + ": unknown field");
  }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw invalid_input(path + "." + key + ": required field is missing");
  return obj.at(key);
}

inline double parse_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw invalid_input(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw invalid_input(path + ": value is not finite");
  return v;
}

inline std::size_t parse_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw invalid_input(path + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

// number or [re, im]
inline cplx parse_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {parse_real(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {parse_real(j[0], path + "[0]"), parse_real(j[1], path + "[1]")};
  throw invalid_input(path + ": expected a number or an [re, im] pair");
}

inline std::vector<cplx> parse_complex_array(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw invalid_input(path + ": expected a nonempty array");
  std::vector<cplx> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_complex(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Eigen::VectorXcd parse_vector(const json& j, const std::string& path) {
  const auto v = parse_complex_array(j, path);
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline Rational parse_alpha(const json& j, const std::string& path) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number()) return rational_from_double(parse_real(j, path));
  } catch (const invalid_input& e) {
    throw invalid_input(path + ": " + e.what());
  }
  throw invalid_input(path + ": expected a rational such as \"1/2\" or a number");
}

inline MomentSequence parse_sequence(const json& j, const std::string& path) {
  reject_unknown(j, path, {"kind", "alpha", "q", "values", "extension", "scale"});
  const json& kind_j = require(j, path, "kind");
  if (!kind_j.is_string()) throw invalid_input(path + ".kind: expected a string");
  const std::string kind = kind_j.get<std::string>();
  const double scale = j.contains("scale") ? parse_real(j["scale"], path + ".scale") : 1.0;
  auto no_field = [&](const char* key) {
    if (j.contains(key)) throw invalid_input(path + "." + key + ": not used by kind '" + kind + "'");
  };
  try {
    if (kind == "factorial") {
      no_field("alpha"), no_field("q"), no_field("values"), no_field("extension");
      return MomentSequence::factorial(scale);
    }
    if (kind == "gevrey" || kind == "gamma_moment") {
      no_field("q"), no_field("values"), no_field("extension");
      const Rational a = parse_alpha(require(j, path, "alpha"), path + ".alpha");
      return kind == "gevrey" ? MomentSequence::gevrey(a, scale) : MomentSequence::gamma_moment(a, scale);
    }
    if (kind == "q_gevrey") {
      no_field("alpha"), no_field("values"), no_field("extension");
      return MomentSequence::q_gevrey(parse_real(require(j, path, "q"), path + ".q"), scale);
    }
    if (kind == "custom") {
      no_field("alpha"), no_field("q"), no_field("scale");
      const json& vals = require(j, path, "values");
      if (!vals.is_array() || vals.empty()) throw invalid_input(path + ".values: expected a nonempty array");
      std::vector<double> v;
      for (std::size_t i = 0; i < vals.size(); ++i) v.push_back(parse_real(vals[i], path + ".values[" + std::to_string(i) + "]"));
      ExtensionRule rule = ExtensionRule::none;
      if (j.contains("extension")) {
        const json& e = j["extension"];
        const std::string s = e.is_string() ? e.get<std::string>() : "";
        if (s == "none") rule = ExtensionRule::none;
        else if (s == "constant_ratio") rule = ExtensionRule::constant_ratio;
        else if (s == "linear_ratio") rule = ExtensionRule::linear_ratio;
        else throw invalid_input(path + ".extension: expected one of none, constant_ratio, linear_ratio");
      }
      return MomentSequence::custom(std::move(v), rule);
    }
  } catch (const invalid_input& e) {
    const std::string msg = e.what();
    if (msg.rfind("$", 0) == 0) throw;
    throw invalid_input(path + ": " + msg);
  }
  throw invalid_input(path + ".kind: unknown sequence kind '" + kind + "'");
}

// "A": [A0, A1, ...], each A_p an n x n row-major nested array.
inline MatrixSeries parse_matrix_series(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw invalid_input(path + ": expected a nonempty array of matrices, one per degree");
  std::vector<Eigen::MatrixXcd> coeffs;
  std::size_t n = 0;
  for (std::size_t p = 0; p < j.size(); ++p) {
    const std::string pp = path + "[" + std::to_string(p) + "]";
    const json& m = j[p];
    if (!m.is_array() || m.empty()) throw invalid_input(pp + ": expected a square matrix (array of rows)");
    if (p == 0) n = m.size();
    if (m.size() != n) throw invalid_input(pp + ": expected " + std::to_string(n) + " rows");
    Eigen::MatrixXcd M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      const std::string pr = pp + "[" + std::to_string(r) + "]";
      if (!m[r].is_array() || m[r].size() != n) throw invalid_input(pr + ": expected a row of " + std::to_string(n) + " entries");
      for (std::size_t c = 0; c < n; ++c)
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_complex(m[r][c], pr + "[" + std::to_string(c) + "]");
    }
    coeffs.push_back(std::move(M));
  }
  return MatrixSeries(std::move(coeffs));
}

// "b": [b0, b1, ...], each b_p an array of n entries.
inline VectorSeries parse_vector_series(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_array() || j.empty()) throw invalid_input(path + ": expected a nonempty array of vectors, one per degree");
  std::vector<Eigen::VectorXcd> coeffs;
  for (std::size_t p = 0; p < j.size(); ++p) {
    const std::string pp = path + "[" + std::to_string(p) + "]";
    Eigen::VectorXcd v = parse_vector(j[p], pp);
    if (static_cast<std::size_t>(v.size()) != n) throw invalid_input(pp + ": expected " + std::to_string(n) + " entries");
    coeffs.push_back(std::move(v));
  }
  return VectorSeries(std::move(coeffs));
}

inline TruncatedSeries parse_series(const json& j, const std::string& path) {
  return TruncatedSeries(parse_complex_array(j, path));
}

inline Tolerances parse_tolerances(const json& j, const std::string& path) {
  reject_unknown(j, path, {"residual", "inverse", "condition_cap"});
  Tolerances t;
  if (j.contains("residual")) t.residual = parse_real(j["residual"], path + ".residual");
  if (j.contains("inverse")) t.inverse = parse_real(j["inverse"], path + ".inverse");
  if (j.contains("condition_cap")) t.condition_cap = parse_real(j["condition_cap"], path + ".condition_cap");
  return t;
}

// MDE_TOLERANCE_SCALE multiplies the residual and inverse tolerances.
inline Tolerances apply_env_scale(Tolerances t) {
  if (const char* s = std::getenv("MDE_TOLERANCE_SCALE")) {
    double v = 0.0;
    const std::string_view sv(s);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc{} || ptr != sv.data() + sv.size() || !(v > 0.0))
      throw invalid_input("MDE_TOLERANCE_SCALE: expected a positive number, got '" + std::string(sv) + "'");
    t.residual *= v;
    t.inverse *= v;
  }
  return t;
}

inline json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw invalid_input(file + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw invalid_input(file + ": malformed JSON (" + std::string(e.what()) + ")");
  }
}

struct SolveInput {
  CauchyProblem problem;
  Tolerances tol;
};

inline SolveInput parse_solve_problem(const json& j, std::optional<std::size_t> order_override) {
  const std::string root = "$";
  reject_unknown(j, root, {"sequence", "A", "b", "y0", "radius", "order", "tolerances"});
  SolveInput in;
  auto& pb = in.problem;
  pb.seq = parse_sequence(require(j, root, "sequence"), "$.sequence");
  pb.A = parse_matrix_series(require(j, root, "A"), "$.A");
  const std::size_t n = pb.A.rows();
  pb.y0 = parse_vector(require(j, root, "y0"), "$.y0");
  if (static_cast<std::size_t>(pb.y0.size()) != n)
    throw invalid_input("$.y0: expected " + std::to_string(n) + " entries to match A");
  if (j.contains("b")) pb.b = parse_vector_series(j["b"], "$.b", n);
  pb.radius = parse_real(require(j, root, "radius"), "$.radius");
  if (!(pb.radius > 0.0)) throw invalid_input("$.radius: must be positive");
  pb.order = order_override ? *order_override : (j.contains("order") ? parse_count(j["order"], "$.order") : 64);
  if (pb.order < 1 || pb.order > max_order)
    throw invalid_input("order: must lie in [1, " + std::to_string(max_order) + "], got " + std::to_string(pb.order));
  if (j.contains("tolerances")) in.tol = parse_tolerances(j["tolerances"], "$.tolerances");
  in.tol = apply_env_scale(in.tol);
  return in;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const TruncatedSeries& f) {
  json a = json::array();
  for (const auto& c : f.coeffs()) a.push_back(to_json(c));
  return a;
}

inline json to_json(const Eigen::MatrixXcd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(to_json(M(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json_row(const Eigen::RowVectorXcd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
  return a;
}

inline json to_json(const MatrixSeries& A) {
  json a = json::array();
  for (std::size_t p = 0; p <= A.order(); ++p) a.push_back(to_json(A[p]));
  return a;
}

// Shortest round-trip decimal.
inline std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_series_csv(std::ostream& os, const VectorSeries& y) {
  os << "degree,component,re,im\n";
  for (std::size_t p = 0; p <= y.order(); ++p)
    for (std::size_t i = 0; i < y.dim(); ++i) {
      const cplx v = y[p](static_cast<Eigen::Index>(i));
      os << p << ',' << (i + 1) << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << '\n';
    }
}

inline void write_series_csv(std::ostream& os, const TruncatedSeries& f) {
  os << "degree,component,re,im\n";
  for (std::size_t p = 0; p <= f.order(); ++p)
    os << p << ",1," << fmt(f[p].real()) << ',' << fmt(f[p].imag()) << '\n';
}

inline void write_text_file(const std::string& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw invalid_input(file + ": cannot open for writing");
  out << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace mde::cli
