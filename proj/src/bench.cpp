#include "rorbk/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rorbk/analysis.hpp"
#include "rorbk/generate.hpp"
#include "rorbk/rng.hpp"

namespace rorbk {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_spec(const std::string& what) {
  throw std::invalid_argument("bench spec: " + what);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!obj.is_object()) bad_spec(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad_spec("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_key(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad_spec("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

void read_index(const json& obj, const char* key, Index& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) bad_spec("key '" + std::string(key) + "' in " + where + " must be a non-negative integer");
  out = v.get<Index>();
}

void read_solver_config(const json& obj, SolverConfig& cfg, const std::string& where) {
  reject_unknown_keys(obj,
                      {"block_rows", "lambda_coef", "orth_updates", "tol", "max_iters", "seed",
                       "tail_window", "time_limit_s"},
                      where);
  read_index(obj, "block_rows", cfg.block_rows, where);
  read_key(obj, "lambda_coef", cfg.lambda_coef, where);
  read_index(obj, "orth_updates", cfg.orth_updates_per_iter, where);
  read_key(obj, "tol", cfg.tol_rrn, where);
  read_index(obj, "max_iters", cfg.max_iters, where);
  read_key(obj, "seed", cfg.seed, where);
  read_index(obj, "tail_window", cfg.tail_window, where);
  read_key(obj, "time_limit_s", cfg.time_limit_s, where);
}

void read_fgmres_config(const json& obj, FgmresConfig& cfg, const std::string& where) {
  reject_unknown_keys(obj, {"eta", "inner_max", "outer_max", "tol", "time_limit_s", "inner"}, where);
  read_key(obj, "eta", cfg.eta, where);
  read_index(obj, "inner_max", cfg.inner_max, where);
  read_index(obj, "outer_max", cfg.outer_max, where);
  read_key(obj, "tol", cfg.tol_rrn, where);
  read_key(obj, "time_limit_s", cfg.time_limit_s, where);
  if (obj.contains("inner")) read_solver_config(obj.at("inner"), cfg.inner_cfg, where + ".inner");
}

std::string number(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

const char* const kColumns[] = {"system",       "solver",  "mean_it", "mean_setup_s", "mean_solve_s",
                                "mean_rrn",     "mean_re", "it_speedup", "cpu_speedup"};

std::vector<std::string> row_fields(const BenchCell& c) {
  return {c.system,
          to_string(c.solver),
          number(c.mean_it),
          number(c.mean_setup_s),
          number(c.mean_solve_s),
          number(c.mean_rrn),
          c.mean_re ? number(*c.mean_re) : std::string(),
          number(c.it_speedup),
          number(c.cpu_speedup)};
}

double ratio(double num, double den) { return den > 0.0 ? num / den : kNaN; }

}  // namespace

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "ror-bk") return SolverKind::ror_bk;
  if (name == "sobk") return SolverKind::sobk;
  if (name == "ta-reblock-u") return SolverKind::ta_reblock_u;
  if (name == "fab-gmres") return SolverKind::fab_gmres;
  throw std::invalid_argument("unknown solver '" + name + "' (ror-bk | sobk | ta-reblock-u | fab-gmres)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::ror_bk: return "ror-bk";
    case SolverKind::sobk: return "sobk";
    case SolverKind::ta_reblock_u: return "ta-reblock-u";
    case SolverKind::fab_gmres: return "fab-gmres";
  }
  return "?";
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw std::invalid_argument("unknown report format '" + name + "' (csv | markdown)");
}

void BenchSpec::validate() const {
  if (systems.empty()) bad_spec("at least one system is required");
  if (solvers.empty()) bad_spec("at least one solver is required");
  if (trials < 1) bad_spec("trials must be >= 1");
  if (reference && std::find(solvers.begin(), solvers.end(), *reference) == solvers.end())
    bad_spec("reference solver " + to_string(*reference) + " is not in the solver list");
  settings.ror_bk.validate();
  settings.sobk.validate();
  settings.ta_reblock_u.validate();
  settings.fab_gmres.validate();
}

SolverKind BenchSpec::reference_solver() const {
  if (reference) return *reference;
  for (SolverKind s : solvers)
    if (s == SolverKind::ror_bk) return s;
  return solvers.front();
}

BenchSpec BenchSpec::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad_spec(std::string("invalid JSON: ") + e.what());
  }
  reject_unknown_keys(doc, {"systems", "solvers", "trials", "seed", "init", "reference", "configs", "output"},
                      "the top level");
  BenchSpec spec;
  if (!doc.contains("systems") || !doc["systems"].is_array()) bad_spec("'systems' must be an array");
  for (const json& s : doc["systems"]) {
    if (s.is_string()) {
      spec.systems.push_back({s.get<std::string>(), s.get<std::string>()});
    } else {
      reject_unknown_keys(s, {"source", "name"}, "a system entry");
      SystemSource src;
      read_key(s, "source", src.source, "a system entry");
      if (src.source.empty()) bad_spec("system entry without 'source'");
      src.name = src.source;
      read_key(s, "name", src.name, "a system entry");
      spec.systems.push_back(std::move(src));
    }
  }
  if (!doc.contains("solvers") || !doc["solvers"].is_array()) bad_spec("'solvers' must be an array");
  for (const json& s : doc["solvers"]) {
    if (!s.is_string()) bad_spec("solver names must be strings");
    spec.solvers.push_back(parse_solver_kind(s.get<std::string>()));
  }
  read_index(doc, "trials", spec.trials, "the top level");
  read_key(doc, "seed", spec.seed, "the top level");
  if (doc.contains("init")) {
    std::string init;
    read_key(doc, "init", init, "the top level");
    if (init == "zero") spec.init = InitKind::zero;
    else if (init == "rowsum") spec.init = InitKind::rowsum;
    else bad_spec("'init' must be \"zero\" or \"rowsum\"");
  }
  if (doc.contains("reference")) {
    std::string ref;
    read_key(doc, "reference", ref, "the top level");
    spec.reference = parse_solver_kind(ref);
  }
  if (doc.contains("configs")) {
    const json& cfgs = doc["configs"];
    reject_unknown_keys(cfgs, {"ror-bk", "sobk", "ta-reblock-u", "fab-gmres"}, "'configs'");
    if (cfgs.contains("ror-bk")) read_solver_config(cfgs["ror-bk"], spec.settings.ror_bk, "configs.ror-bk");
    if (cfgs.contains("sobk")) read_solver_config(cfgs["sobk"], spec.settings.sobk, "configs.sobk");
    if (cfgs.contains("ta-reblock-u"))
      read_solver_config(cfgs["ta-reblock-u"], spec.settings.ta_reblock_u, "configs.ta-reblock-u");
    if (cfgs.contains("fab-gmres"))
      read_fgmres_config(cfgs["fab-gmres"], spec.settings.fab_gmres, "configs.fab-gmres");
  }
  if (doc.contains("output")) {
    const json& out = doc["output"];
    reject_unknown_keys(out, {"path", "format"}, "'output'");
    std::string path, format = "csv";
    read_key(out, "path", path, "'output'");
    read_key(out, "format", format, "'output'");
    spec.output = path;
    spec.format = parse_report_format(format);
  }
  spec.validate();
  return spec;
}

BenchSpec BenchSpec::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open bench spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

bool BenchCell::all_converged() const {
  for (const TrialLog& t : trials)
    if (t.failed() || !t.converged) return false;
  return true;
}

bool BenchResult::all_converged() const {
  for (const BenchCell& c : cells)
    if (!c.all_converged()) return false;
  return true;
}

TrialLog run_trial(SolverKind solver, const LinearSystem& sys, InitKind init,
                   const SolverSettings& settings, std::uint64_t solver_seed, Vector* x_out) {
  TrialLog log;
  try {
    const auto t0 = Clock::now();
    const Vector x0 = init == InitKind::rowsum && norm2(sys.b) > 0.0
                          ? initial_solution(sys.A(), sys.b).x0
                          : Vector(sys.cols(), 0.0);
    const double init_s = std::chrono::duration<double>(Clock::now() - t0).count();
    Vector x;
    if (solver == SolverKind::fab_gmres) {
      FgmresConfig cfg = settings.fab_gmres;
      cfg.inner_cfg.seed = solver_seed;
      FgmresResult res = fab_gmres_solve(sys, x0, cfg);
      log.iterations = res.report.outer_iterations;
      log.setup_s = res.report.setup_time_s;
      log.solve_s = res.report.wall_time_s;
      log.rrn = res.report.final_rrn;
      log.converged = res.report.converged;
      if (sys.x_star) log.re = compute_metrics(sys, res.x).re;
      x = std::move(res.x);
    } else {
      SolveResult res;
      SolverConfig cfg;
      switch (solver) {
        case SolverKind::sobk:
          cfg = settings.sobk;
          cfg.seed = solver_seed;
          res = sobk_solve(sys, x0, cfg);
          break;
        case SolverKind::ta_reblock_u:
          cfg = settings.ta_reblock_u;
          cfg.seed = solver_seed;
          res = ta_reblock_u_solve(sys, x0, cfg);
          break;
        default:
          cfg = settings.ror_bk;
          cfg.seed = solver_seed;
          res = ror_bk_solve(sys, x0, cfg);
          break;
      }
      log.iterations = res.report.iterations;
      log.setup_s = res.report.setup_time_s;
      log.solve_s = res.report.wall_time_s;
      log.rrn = res.report.final_rrn;
      log.converged = res.report.converged;
      log.re = res.report.final_re;
      x = std::move(res.x);
    }
    log.setup_s += init_s;
    if (x_out) *x_out = std::move(x);
  } catch (const std::exception& e) {
    log.error = e.what();
    log.converged = false;
  }
  return log;
}

void aggregate(std::vector<BenchCell>& cells, SolverKind reference) {
  for (BenchCell& c : cells) {
    double it = 0, setup = 0, solve = 0, rrn = 0, re = 0;
    Index ok = 0, with_re = 0;
    for (const TrialLog& t : c.trials) {
      if (t.failed()) continue;
      ++ok;
      it += static_cast<double>(t.iterations);
      setup += t.setup_s;
      solve += t.solve_s;
      rrn += t.rrn;
      if (t.re) {
        ++with_re;
        re += *t.re;
      }
    }
    const double n = static_cast<double>(ok);
    c.mean_it = ok ? it / n : kNaN;
    c.mean_setup_s = ok ? setup / n : kNaN;
    c.mean_solve_s = ok ? solve / n : kNaN;
    c.mean_rrn = ok ? rrn / n : kNaN;
    c.mean_re = ok && with_re == ok ? std::optional<double>(re / n) : std::nullopt;
  }
  for (BenchCell& c : cells) {
    const BenchCell* ref = nullptr;
    for (const BenchCell& r : cells)
      if (r.system == c.system && r.solver == reference) ref = &r;
    if (!ref) {
      c.it_speedup = c.cpu_speedup = kNaN;
      continue;
    }
    c.it_speedup = ratio(c.mean_it, ref->mean_it);
    c.cpu_speedup = ratio(c.mean_setup_s + c.mean_solve_s, ref->mean_setup_s + ref->mean_solve_s);
  }
}

BenchResult run_benchmark(const BenchSpec& spec) {
  spec.validate();
  BenchResult result;
  result.reference = spec.reference_solver();
  for (Index i = 0; i < spec.systems.size(); ++i) {
    const SystemSource& src = spec.systems[i];
    const std::uint64_t sys_seed = Rng::derive_seed(spec.seed, i);
    auto a = load_matrix(src.source, Rng::derive_seed(sys_seed, 0));
    const std::string name = src.name.empty() ? src.source : src.name;
    const Index first = result.cells.size();
    for (SolverKind s : spec.solvers) {
      BenchCell cell;
      cell.system = name;
      cell.solver = s;
      result.cells.push_back(std::move(cell));
    }
    for (Index t = 0; t < spec.trials; ++t) {
      const LinearSystem sys = synthetic_system(a, name, Rng::derive_seed(sys_seed, t + 1));
      for (Index j = 0; j < spec.solvers.size(); ++j) {
        const SolverKind s = spec.solvers[j];
        const std::uint64_t base = s == SolverKind::fab_gmres ? spec.settings.fab_gmres.inner_cfg.seed
                                   : s == SolverKind::sobk    ? spec.settings.sobk.seed
                                   : s == SolverKind::ta_reblock_u ? spec.settings.ta_reblock_u.seed
                                                                   : spec.settings.ror_bk.seed;
        TrialLog log = run_trial(s, sys, spec.init, spec.settings, Rng::derive_seed(base, t));
        log.trial = t;
        result.cells[first + j].trials.push_back(std::move(log));
      }
    }
  }
  aggregate(result.cells, result.reference);
  return result;
}

std::string format_report(const BenchResult& result, ReportFormat format) {
  if (result.cells.empty()) throw std::invalid_argument("format_report: empty result");
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
    for (const BenchCell& c : result.cells) {
      const auto fields = row_fields(c);
      for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
      out << '\n';
    }
  } else {
    out << '|';
    for (const char* col : kColumns) out << ' ' << col << " |";
    out << "\n|";
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << "---|";
    out << '\n';
    for (const BenchCell& c : result.cells) {
      out << '|';
      for (const std::string& f : row_fields(c)) out << ' ' << f << " |";
      out << '\n';
    }
  }
  return out.str();
}

void emit_report(const BenchResult& result, ReportFormat format, std::ostream& out) {
  out << format_report(result, format);
  if (!out) throw std::runtime_error("emit_report: write failed");
}

void emit_report(const BenchResult& result, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format_report(result, format);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("emit_report: write failed for " + path.string());
}

}  // namespace rorbk
