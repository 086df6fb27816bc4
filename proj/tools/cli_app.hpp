#pragma once

// Subcommand handlers for the mde executable. Exit codes: 0 success,
// 2 validation error, 3 mathematical failure. Errors print a JSON diagnostic
// on stdout.

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "problem_io.hpp"

namespace mde::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_math = 3;

struct Outcome {
  int code = exit_ok;
  json diagnostic;  // null on success
};

inline Outcome diagnose_exception(const std::exception_ptr& ep) {
  auto make = [](int code, const char* kind, const std::string& msg) {
    return Outcome{code, json{{"status", "error"}, {"kind", kind}, {"exit_code", code}, {"message", msg}}};
  };
  try {
    std::rethrow_exception(ep);
  } catch (const condition_ii_violation& e) {
    Outcome o = make(exit_math, "condition_ii_violation", e.what());
    o.diagnostic["j"] = e.j();
    o.diagnostic["p"] = e.p();
    return o;
  } catch (const no_cyclic_vector& e) {
    return make(exit_math, "no_cyclic_vector", e.what());
  } catch (const singular_at_origin& e) {
    return make(exit_math, "singular_at_origin", e.what());
  } catch (const math_error& e) {
    return make(exit_math, "math_error", e.what());
  } catch (const out_of_range_error& e) {
    Outcome o = make(exit_validation, "out_of_range", e.what());
    o.diagnostic["index"] = e.index();
    o.diagnostic["available"] = e.available();
    return o;
  } catch (const order_exhausted& e) {
    return make(exit_validation, "order_exhausted", e.what());
  } catch (const invalid_input& e) {
    return make(exit_validation, "invalid_input", e.what());
  } catch (const CLI::ParseError& e) {
    return make(exit_validation, "usage", e.what());
  } catch (const std::exception& e) {
    return make(exit_math, "math_error", e.what());
  }
}

inline void emit(std::ostream& os, const std::string& file, const std::string& text) {
  if (file.empty()) os << text;
  else write_text_file(file, text);
}

// ---------------------------------------------------------------------------
// sequence-check
// ---------------------------------------------------------------------------

inline json sequence_report(const MomentSequence& seq, std::size_t P) {
  const auto d = diagnose(seq, P);
  json r;
  r["kind"] = to_string(seq.kind());
  r["max_p"] = P;
  r["assumption_A"] = {{"holds", d.assumption_A.holds_on_window}, {"C_estimate", finite_or_null(d.assumption_A.C_estimate)}};
  r["assumption_B"] = {{"holds", d.assumption_B.holds_on_window},
                       {"alpha", d.assumption_B.alpha_estimate.str()},
                       {"alpha_value", d.assumption_B.alpha_estimate.value()},
                       {"alpha_fit", d.assumption_B.alpha_fit},
                       {"C_estimate", finite_or_null(d.assumption_B.C_estimate)}};
  r["preferred"] = to_string(d.preferred());
  r["lc_ok"] = d.lc_ok;
  r["mg_ok"] = d.mg_ok;
  r["A1_estimate"] = finite_or_null(d.A1_estimate);
  r["snq_partial_ok"] = d.snq_partial_ok;
  r["A2_estimate"] = finite_or_null(d.A2_estimate);
  r["probe_window"] = d.probe_window;
  return r;
}

// The spec file is either a bare sequence record or {"sequence": {...}}.
inline MomentSequence read_sequence_file(const std::string& file) {
  const json j = read_json_file(file);
  if (j.is_object() && j.contains("sequence")) {
    reject_unknown(j, "$", {"sequence"});
    return parse_sequence(j["sequence"], "$.sequence");
  }
  return parse_sequence(j, "$");
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

inline json certificate_report(const SolutionResult& res) {
  const auto& c = res.certificate;
  json r;
  r["path"] = to_string(c.path);
  r["alpha"] = c.alpha;
  r["C_tilde"] = c.C_tilde;
  r["c"] = c.bound.c;
  r["K"] = c.bound.K;
  r["radius_guaranteed"] = c.radius_guaranteed ? json(*c.radius_guaranteed) : json(nullptr);
  r["r1_bound"] = c.r1_bound;
  r["majorant_dominates"] = res.majorant_dominates;
  if (res.radius_empirical) {
    r["radius_empirical"] = res.radius_empirical->unbounded ? json("unbounded") : json(res.radius_empirical->radius);
  } else {
    r["radius_empirical"] = nullptr;
  }
  r["residual_max_abs"] = res.residual.max_abs;
  r["residual_max_relative"] = res.residual.max_relative;
  r["residual_ok"] = res.residual_ok;
  r["order"] = res.y.order();
  r["dimension"] = res.y.dim();
  return r;
}

// Solves one problem file; returns the sidecar report. The residual check is
// a hard failure: a solution that does not satisfy its own recursion is not
// written as a success.
inline json solve_file(const std::string& problem, std::optional<std::size_t> order, const std::string& csv_out,
                       const std::string& sidecar_out, std::ostream& os) {
  const auto in = parse_solve_problem(read_json_file(problem), order);
  const auto res = solve(in.problem, in.tol);
  json report = certificate_report(res);
  if (!res.residual_ok)
    throw math_error("recursion residual " + fmt(res.residual.max_relative) + " exceeds tolerance " + fmt(in.tol.residual));
  std::ostringstream csv;
  write_series_csv(csv, res.y);
  emit(os, csv_out, csv.str());
  if (!sidecar_out.empty()) write_text_file(sidecar_out, dump(report));
  return report;
}

inline int run_batch(const std::string& dir, const std::string& out_dir, std::optional<std::size_t> order,
                     std::ostream& os) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw invalid_input("--batch: '" + dir + "' is not a directory");
  if (out_dir.empty()) throw invalid_input("--batch needs --out-dir");
  fs::create_directories(out_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<std::future<Outcome>> jobs;
  for (const auto& f : files) {
    jobs.push_back(std::async(std::launch::async, [f, out_dir, order] {
      const fs::path stem = fs::path(out_dir) / f.stem();
      try {
        std::ostringstream sink;
        solve_file(f.string(), order, stem.string() + ".csv", stem.string() + ".json", sink);
        return Outcome{};
      } catch (...) {
        return diagnose_exception(std::current_exception());
      }
    }));
  }
  json summary = json::array();
  int code = exit_ok;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Outcome o = jobs[i].get();
    json entry = {{"file", files[i].filename().string()}, {"exit_code", o.code}};
    if (o.code != exit_ok) entry["error"] = o.diagnostic;
    summary.push_back(entry);
    code = std::max(code, o.code);
  }
  os << dump(json{{"status", code == exit_ok ? "ok" : "error"}, {"problems", summary}});
  return code;
}

// ---------------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------------

inline Eigen::RowVectorXcd parse_cyclic_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw invalid_input("--cyclic-vector: empty entry in '" + text + "'");
    const std::string t = item.substr(b, e - b + 1);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw invalid_input("--cyclic-vector: malformed entry '" + t + "'");
    v.push_back(x);
  }
  if (v.empty()) throw invalid_input("--cyclic-vector: expected comma separated numbers");
  Eigen::RowVectorXcd r(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) r(static_cast<Eigen::Index>(i)) = v[i];
  return r;
}

// {"a": [a_1, ..., a_n], "cauchy": [...]}, each a_j a coefficient array.
inline json eq2sys(const json& j) {
  reject_unknown(j, "$", {"a", "cauchy", "sequence", "radius", "order"});
  const json& aj = require(j, "$", "a");
  if (!aj.is_array() || aj.empty()) throw invalid_input("$.a: expected a nonempty array of coefficient series");
  std::vector<TruncatedSeries> a;
  std::size_t N = 0;
  for (std::size_t i = 0; i < aj.size(); ++i) {
    a.push_back(parse_series(aj[i], "$.a[" + std::to_string(i) + "]"));
    N = std::max(N, a.back().order());
  }
  for (auto& s : a) s = s.truncated(N);
  const auto cf = equation_to_system(a);
  json out;
  out["A"] = to_json(cf.B);
  if (j.contains("cauchy")) {
    const auto data = parse_complex_array(j["cauchy"], "$.cauchy");
    if (data.size() != a.size()) throw invalid_input("$.cauchy: expected " + std::to_string(a.size()) + " entries");
    json y0 = json::array();
    for (const auto& c : data) y0.push_back(to_json(c));
    out["y0"] = y0;
  }
  for (const char* key : {"sequence", "radius", "order"})
    if (j.contains(key)) out[key] = j[key];
  return out;
}

inline json sys2eq(const json& j, const std::optional<Eigen::RowVectorXcd>& v0) {
  reject_unknown(j, "$", {"sequence", "A", "b", "y0", "radius", "order", "tolerances"});
  const MatrixSeries A = parse_matrix_series(require(j, "$", "A"), "$.A");
  const auto cf = system_to_equation(A, v0);
  const std::size_t n = A.rows();
  json out;
  out["v0"] = to_json_row(*cf.v0);
  out["T"] = to_json(cf.T);
  out["T_condition"] = cf.T_condition;
  json a = json::array();
  for (const auto& s : cf.a) a.push_back(to_json(s));
  out["a"] = a;
  json last = json::array();  // column k of the last row as a series in z
  for (std::size_t k = 0; k < n; ++k) {
    TruncatedSeries s = TruncatedSeries::zero(A.order());
    for (std::size_t p = 0; p <= A.order(); ++p) s[p] = cf.B[p](static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(k));
    last.push_back(to_json(s));
  }
  out["last_row"] = last;
  out["B"] = to_json(cf.B);
  return out;
}

// ---------------------------------------------------------------------------
// const-solve, delta-e
// ---------------------------------------------------------------------------

inline std::size_t parse_order(const json& j, std::size_t fallback) {
  const std::size_t N = j.contains("order") ? parse_count(j["order"], "$.order") : fallback;
  if (N > max_order) throw invalid_input("$.order: must not exceed " + std::to_string(max_order));
  return N;
}

inline json order_type_json(const OrderType& ot) {
  return {{"polynomial", ot.polynomial}, {"entire", ot.entire}, {"rho", ot.rho}, {"sigma", ot.sigma}};
}

inline json const_solve(const json& j, const std::string& csv_out) {
  reject_unknown(j, "$", {"a", "cauchy", "sequence", "order"});
  const auto a = parse_complex_array(require(j, "$", "a"), "$.a");
  const auto cauchy = parse_complex_array(require(j, "$", "cauchy"), "$.cauchy");
  if (cauchy.size() != a.size()) throw invalid_input("$.cauchy: expected " + std::to_string(a.size()) + " entries to match $.a");
  const auto seq = j.contains("sequence") ? parse_sequence(j["sequence"], "$.sequence") : MomentSequence::factorial();
  const auto sol = solve_const(a, cauchy, seq, parse_order(j, 64));

  json out;
  json roots = json::array();
  for (std::size_t r = 0; r < sol.roots.size(); ++r) {
    json c = json::array();
    for (const auto& v : sol.coeffs[r]) c.push_back(to_json(v));
    roots.push_back({{"lambda", to_json(sol.roots[r].lambda)}, {"multiplicity", sol.roots[r].multiplicity}, {"c", c}});
  }
  out["roots"] = roots;
  out["fit_condition"] = sol.fit_condition;
  out["ambiguous_roots"] = sol.ambiguous_roots;
  out["warnings"] = sol.warnings;
  out["residual"] = sol.residual;
  out["cauchy_defect"] = sol.cauchy_defect;
  if (sol.y.order() >= 8) out["order_type"] = order_type_json(estimate_order_type(sol.log_abs));
  if (sol.seq.kernel_order() && sol.y.order() >= 8) {
    const auto tb = max_root_type_bound(sol);
    out["type_bound"] = {{"rho", tb.rho}, {"sigma", tb.sigma}, {"consistent", tb.consistent}};
  }
  if (!csv_out.empty()) {
    std::ostringstream csv;
    write_series_csv(csv, sol.y);
    write_text_file(csv_out, csv.str());
  }
  return out;
}

// {"sequence": {...}, "lambda": z, "h": k, "order": N}
inline json delta_e_command(const json& j, const std::string& csv_out) {
  reject_unknown(j, "$", {"sequence", "lambda", "h", "order"});
  const auto seq = j.contains("sequence") ? parse_sequence(j["sequence"], "$.sequence") : MomentSequence::factorial();
  const cplx lambda = parse_complex(require(j, "$", "lambda"), "$.lambda");
  const std::size_t h = j.contains("h") ? parse_count(j["h"], "$.h") : 0;
  const std::size_t N = parse_order(j, 64);
  if (h > N) throw invalid_input("$.h: must not exceed the order " + std::to_string(N));
  const auto d = delta_e(seq, lambda, h, N);
  json out;
  out["lambda"] = to_json(lambda);
  out["h"] = h;
  out["order"] = N;
  if (h >= 1) {
    const auto lc = ladder_defect(seq, lambda, h, N);
    out["ladder"] = {{"max_relative", lc.max_relative}, {"degrees", lc.degrees}};
  }
  if (N >= 8) out["order_type"] = order_type_json(estimate_order_type(d.log_abs));
  json la = json::array();
  for (double v : d.log_abs) la.push_back(finite_or_null(v));
  out["log_abs"] = la;
  if (!csv_out.empty()) {
    std::ostringstream csv;
    write_series_csv(csv, d.series);
    write_text_file(csv_out, csv.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// frac-verify
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t frac_seed = 0xF7AC;

inline json frac_verify(Rational alpha, std::size_t N, std::size_t grid) {
  if (alpha.num <= 0 || alpha.num > alpha.den) throw invalid_input("--alpha: must be a rational in (0, 1]");
  if (N < 1 || N > 512) throw invalid_input("--order: must lie in [1, 512]");
  if (grid < 2) throw invalid_input("--grid: needs at least 2 points");
  std::mt19937_64 rng(frac_seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  json props = json::array();
  bool all = true;
  auto record = [&](const char* name, double defect, double tol) {
    const bool ok = defect <= tol;
    all = all && ok;
    props.push_back({{"property", name}, {"max_defect", defect}, {"tolerance", tol}, {"pass", ok}});
  };

  // Caputo o RL = identity; coefficients scaled by 1/Gamma(1 + alpha p) to stay O(1)
  double li = 0.0;
  PuiseuxSeries f = PuiseuxSeries::zero(alpha, N);
  for (std::size_t p = 0; p <= N; ++p)
    f.coeffs[p] = cplx(unif(rng), unif(rng)) * std::exp(-std::lgamma(1.0 + alpha.value() * static_cast<double>(p)));
  const auto back = caputo_derivative(rl_integral(f));
  for (std::size_t p = 0; p <= N; ++p) li = std::max(li, std::abs(back.coeffs[p] - f.coeffs[p]) / (1e-300 + std::abs(f.coeffs[p])));
  record("caputo_rl_left_inverse", li, 1e-12);

  TruncatedSeries g = TruncatedSeries::zero(N);
  for (std::size_t p = 0; p <= N; ++p) g[p] = cplx(unif(rng), unif(rng));
  record("moment_caputo_identity", check_moment_caputo_identity(g, alpha), 1e-10);

  double eq = 0.0;
  for (double cC : {1.0, 2.0})
    for (double K : {1.0, 2.0}) {
      const PicardParams prm{1.0, cC, 1.0, K, alpha, {}};
      const auto h = picard_oracle(prm, N, N);
      const auto m = majorant_sequence(1.0, cC, 1.0, K, alpha.value(), N);
      for (std::size_t p = 0; p < N; ++p)
        eq = std::max(eq, std::abs(h.coeffs[p].real() - m[p]) / std::max(1.0, std::abs(m[p])));
    }
  record("picard_majorant_equivalence", eq, 1e-10);

  const PicardParams prm{1.0, 1.0, 1.0, 1.0, alpha, {}};
  const auto db = check_delta_bound(prm, N, 0.9, grid);
  record("delta_bound", std::max(0.0, db.sup_partial / db.Delta - 1.0), 1e-9);

  return {{"alpha", alpha.str()}, {"order", N}, {"grid", grid}, {"pass", all}, {"properties", props}};
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

// "const solve" and "frac verify" are accepted as two-word spellings.
inline std::vector<std::string> normalize_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() >= 3 && ((args[1] == "const" && args[2] == "solve") || (args[1] == "frac" && args[2] == "verify"))) {
    args[1] += "-" + args[2];
    args.erase(args.begin() + 2);
  }
  return args;
}

inline int run(int argc, char** argv, std::ostream& os = std::cout) {
  CLI::App app{"Moment differential equations: series solver, transforms and verification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string spec_file, problem, out, sidecar, batch, out_dir, cyclic, alpha_text;
  std::size_t max_p = 100, grid = 256, frac_order = 32;
  std::optional<std::size_t> order;

  auto* seq_cmd = app.add_subcommand("sequence-check", "Check assumptions (A)/(B), lc, mg and snq on a moment sequence");
  seq_cmd->add_option("--spec", spec_file, "Sequence record (JSON)")->required();
  seq_cmd->add_option("--max-p", max_p, "Probe window P")->check(CLI::Range(std::size_t{8}, max_order));
  seq_cmd->add_option("--out", out, "Report file (default stdout)");

  auto* solve_cmd = app.add_subcommand("solve", "Solve d_m y = A y + b as a truncated power series");
  auto* pb_opt = solve_cmd->add_option("--problem", problem, "Problem file (JSON)");
  auto* batch_opt = solve_cmd->add_option("--batch", batch, "Directory of problem files, solved concurrently");
  pb_opt->excludes(batch_opt);
  solve_cmd->add_option("--order", order, "Truncation order N (overrides the file)");
  solve_cmd->add_option("--out", out, "Coefficient CSV (default stdout)");
  solve_cmd->add_option("--sidecar", sidecar, "Certificate report (JSON)");
  solve_cmd->add_option("--out-dir", out_dir, "Output directory for --batch");

  auto* tr_cmd = app.add_subcommand("transform", "Convert between scalar equations and first order systems");
  tr_cmd->require_subcommand(1);
  auto* e2s = tr_cmd->add_subcommand("eq2sys", "n-th order equation -> companion system");
  e2s->add_option("--problem", problem, "Equation file (JSON)")->required();
  e2s->add_option("--out", out, "Output file (default stdout)");
  auto* s2e = tr_cmd->add_subcommand("sys2eq", "System -> n-th order equation via a cyclic vector");
  s2e->add_option("--problem", problem, "System file (JSON)")->required();
  s2e->add_option("--cyclic-vector", cyclic, "Explicit cyclic vector, e.g. \"1,2,1\"");
  s2e->add_option("--out", out, "Output file (default stdout)");

  auto* cs_cmd = app.add_subcommand("const-solve", "Constant coefficient equation on the Delta_h E basis");
  cs_cmd->add_option("--problem", problem, "Equation file (JSON)")->required();
  cs_cmd->add_option("--out", out, "Coefficient CSV");
  cs_cmd->add_option("--report", sidecar, "Report file (default stdout)");

  auto* de_cmd = app.add_subcommand("delta-e", "Materialize Delta_h E(lambda, z) and check the ladder identity");
  de_cmd->add_option("--problem", problem, "Parameter file (JSON)")->required();
  de_cmd->add_option("--out", out, "Coefficient CSV");
  de_cmd->add_option("--report", sidecar, "Report file (default stdout)");

  auto* fv_cmd = app.add_subcommand("frac-verify", "Check the fractional identities and the Picard oracle");
  fv_cmd->add_option("--alpha", alpha_text, "Exponent a/b in (0, 1]")->required();
  fv_cmd->add_option("--order", frac_order, "Truncation order N");
  fv_cmd->add_option("--grid", grid, "Grid points on [0, r1]");

  const auto args = normalize_args(argc, argv);
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::Success& e) {
      return app.exit(e);
    }

    if (seq_cmd->parsed()) {
      emit(os, out, dump(sequence_report(read_sequence_file(spec_file), max_p)));
    } else if (solve_cmd->parsed()) {
      if (!batch.empty()) return run_batch(batch, out_dir, order, os);
      if (problem.empty()) throw invalid_input("solve: one of --problem or --batch is required");
      solve_file(problem, order, out, sidecar, os);
    } else if (e2s->parsed()) {
      emit(os, out, dump(eq2sys(read_json_file(problem))));
    } else if (s2e->parsed()) {
      std::optional<Eigen::RowVectorXcd> v0;
      if (!cyclic.empty()) v0 = parse_cyclic_vector(cyclic);
      emit(os, out, dump(sys2eq(read_json_file(problem), v0)));
    } else if (cs_cmd->parsed()) {
      emit(os, sidecar, dump(const_solve(read_json_file(problem), out)));
    } else if (de_cmd->parsed()) {
      emit(os, sidecar, dump(delta_e_command(read_json_file(problem), out)));
    } else if (fv_cmd->parsed()) {
      Rational a;
      try {
        a = parse_rational(alpha_text);
      } catch (const invalid_input& e) {
        throw invalid_input(std::string("--alpha: ") + e.what());
      }
      const json rep = frac_verify(a, frac_order, grid);
      os << dump(rep);
      return rep["pass"].get<bool>() ? exit_ok : exit_math;
    }
    return exit_ok;
  } catch (...) {
    const Outcome o = diagnose_exception(std::current_exception());
    os << dump(o.diagnostic);
    return o.code;
  }
}

}  // namespace mde::cli
