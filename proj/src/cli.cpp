#include "kktmg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace kktmg {

namespace {

std::string sci3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file '" + path + "'");
  return f;
}

void dump_artifacts(const RunConfig& c, const Hierarchy& h, double beta) {
  if (!c.mesh_dump.empty()) {
    std::ofstream f = open_output(c.mesh_dump);
    write_mesh_json(h.meshes.back(), f);
  }
  if (!c.matrix_dump.empty()) {
    std::ofstream f = open_output(c.matrix_dump);
    write_triplets(SaddleOperator(h.ops.back(), beta).K(), f);
  }
}

CycleConfig cycle_config(const RunConfig& c, double beta, int m1, int m2) {
  CycleConfig cfg;
  cfg.beta = beta;
  cfg.m1 = m1;
  cfg.m2 = m2;
  cfg.cycle = c.cycle;
  cfg.inner.nu = c.inner_nu;
  cfg.inner.damping = c.inner_damping;
  cfg.seed = c.seed;
  cfg.fmg_tolerance = c.fmg_tolerance;
  return cfg;
}

int run_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  SweepSpec spec;
  spec.domains = {c.domain};
  spec.betas = c.betas;
  for (int k = 1; k <= c.max_level; ++k) spec.levels.push_back(k);
  spec.smoothing = c.smoothing;
  spec.cycle = c.cycle;
  spec.base = cycle_config(c, c.betas.front(), 1, 1);
  spec.measure.power.tol = c.power_tol;
  spec.measure.power.seed = c.seed;
  spec.measure.dense_threshold = c.dense_threshold;
  spec.measure.timing = c.timing;
  spec.jobs = c.jobs;
  if (!c.mesh_dump.empty() || !c.matrix_dump.empty())
    dump_artifacts(c, *build_fe_hierarchy(c.domain, c.max_level), c.betas.front());
  const std::vector<ContractionReport> reports = sweep(spec);

  if (c.output_path.empty()) {
    write_csv(reports, out);
  } else {
    std::ofstream f = open_output(c.output_path);
    write_csv(reports, f);
    for (const ContractionReport& r : reports) {
      out << r.domain << "  beta=" << sci3(r.beta) << "  " << cycle_name(r.cycle) << "(" << r.m1 << "," << r.m2
          << ")\n  k   ||E_k||    sec/cycle\n";
      for (const ContractionEntry& e : r.entries) {
        char line[96];
        if (e.error.empty())
          std::snprintf(line, sizeof line, "%3d   %s   %s%s\n", e.level, sci3(e.norm_Ek).c_str(),
                        sci3(e.seconds_per_cycle).c_str(), e.converged ? "" : "  (not converged)");
        else
          std::snprintf(line, sizeof line, "%3d   failed\n", e.level);
        out << line;
      }
    }
  }
  int status = 0;
  for (const ContractionReport& r : reports)
    for (const ContractionEntry& e : r.entries)
      if (!e.error.empty()) {
        err << "error: " << r.domain << " beta=" << r.beta << " level " << e.level << ": " << e.error << '\n';
        status = 3;
      }
  return status;
}

nlohmann::json error_json(const ErrorNorms& e, const ControlErrors& u) {
  return {{"rel_H1_p", e.rel_H1_p}, {"rel_L2_p", e.rel_L2_p}, {"rel_H1_y", e.rel_H1_y},
          {"rel_L2_y", e.rel_L2_y}, {"rel_H1_u", u.rel_H1},   {"rel_L2_u", u.rel_L2}};
}

int run_solve(const RunConfig& c, std::ostream& out, std::ostream& err, bool table) {
  const auto h = build_fe_hierarchy(c.domain, c.max_level);
  dump_artifacts(c, *h, c.betas.front());
  const auto [m1, m2] = c.smoothing.front();
  nlohmann::json rows = nlohmann::json::array();
  if (table)
    out << "y_d=" << target_name(c.yd) << "  h=" << h->meshes.back().h << "  FMG " << cycle_name(c.cycle) << "(" << m1
        << "," << m2 << ")\n"
        << "beta       |p-ph|_1   ||p-ph||   |y-yh|_1   ||y-yh||   time\n";
  for (double beta : c.betas) {
    CycleConfig cfg = cycle_config(c, beta, m1, m2);
    if (cfg.cycle == CycleKind::FMG) cfg.cycle = CycleKind::W;
    const SaddleMultigrid mg(h, cfg);
    const OriginalSolution sol = solve_original(mg, c.yd);
    nlohmann::json row = {{"domain", domain_name(c.domain)},
                          {"beta", beta},
                          {"yd", target_name(c.yd)},
                          {"level", c.max_level},
                          {"h", h->meshes.back().h},
                          {"dofs_per_variable", h->meshes.back().dof_count()},
                          {"fmg_iterations", sol.fmg.iterations},
                          {"final_relative_residual",
                           sol.fmg.residual_history.back().empty() ? 0.0 : sol.fmg.residual_history.back().back()},
                          {"seconds", sol.seconds}};
    if (c.domain == DomainKind::UnitSquare) {
      const ExactSolution ex = exact_solution_adaptive(beta, c.yd);
      if (!ex.tail_ok)
        err << "warning: series truncated at N=" << ex.truncation << " with relative tail estimate "
            << ex.tail_estimate << '\n';
      const ErrorNorms e = error_norms(h->meshes.back(), sol.p_bar, sol.y_bar, ex);
      const ControlErrors u = control_error(e, beta);
      row["errors"] = error_json(e, u);
      row["series_truncation"] = ex.truncation;
      if (table)
        out << sci3(beta) << "   " << sci3(e.rel_H1_p) << "   " << sci3(e.rel_L2_p) << "   " << sci3(e.rel_H1_y)
            << "   " << sci3(e.rel_L2_y) << "   " << sci3(sol.seconds) << '\n';
    }
    if (!table) {
      out << domain_name(c.domain) << " beta=" << sci3(beta) << " level " << c.max_level << ": FMG iterations";
      for (int it : sol.fmg.iterations) out << ' ' << it;
      out << "  |p|_M=" << sci3(std::sqrt(sol.p_bar.dot(h->ops.back().M * sol.p_bar)))
          << "  |y|_M=" << sci3(std::sqrt(sol.y_bar.dot(h->ops.back().M * sol.y_bar))) << "  " << sci3(sol.seconds)
          << " s\n";
      if (row.contains("errors")) {
        const auto& e = row["errors"];
        out << "  relative errors: |p|_1 " << sci3(e["rel_H1_p"].get<double>()) << "  ||p|| "
            << sci3(e["rel_L2_p"].get<double>()) << "  |y|_1 " << sci3(e["rel_H1_y"].get<double>()) << "  ||y|| "
            << sci3(e["rel_L2_y"].get<double>()) << '\n';
      }
    }
    rows.push_back(std::move(row));
  }
  if (!c.output_path.empty()) {
    std::ofstream f = open_output(c.output_path);
    if (table) {
      f.precision(17);
      f << "beta,yd,level,h,rel_H1_p,rel_L2_p,rel_H1_y,rel_L2_y,rel_H1_u,rel_L2_u,seconds\n";
      for (const auto& r : rows) {
        const auto& e = r["errors"];
        f << r["beta"].get<double>() << ',' << r["yd"].get<std::string>() << ',' << r["level"].get<int>() << ','
          << r["h"].get<double>() << ',' << e["rel_H1_p"].get<double>() << ',' << e["rel_L2_p"].get<double>() << ','
          << e["rel_H1_y"].get<double>() << ',' << e["rel_L2_y"].get<double>() << ','
          << e["rel_H1_u"].get<double>() << ',' << e["rel_L2_u"].get<double>() << ',' << r["seconds"].get<double>()
          << '\n';
      }
    } else {
      f << rows.dump(2) << '\n';
    }
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

std::string_view mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Solve: return "solve";
    case RunMode::ContractionSweep: return "contraction-sweep";
    case RunMode::Table1: return "table1";
  }
  return "?";
}

RunMode parse_mode(std::string_view name) {
  if (name == "solve") return RunMode::Solve;
  if (name == "contraction-sweep" || name == "contraction_sweep") return RunMode::ContractionSweep;
  if (name == "table1") return RunMode::Table1;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

int max_level_cap(DomainKind domain) {
  switch (domain) {
    case DomainKind::UnitSquare: return 7;
    case DomainKind::Pentagon: return 6;
    case DomainKind::UnitCube: return 5;
    case DomainKind::LShape: return 6;
  }
  return 0;
}

RunConfig resolve(RunConfig c) {
  if (c.betas.empty()) throw ConfigError("at least one beta is required");
  for (double b : c.betas)
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("beta must be positive and finite");
  if (c.max_level < 0) {
    if (c.mode == RunMode::Table1) c.max_level = 5;
    else c.max_level = c.domain == DomainKind::UnitCube ? 3 : 5;
  }
  const int cap = max_level_cap(c.domain);
  if (c.max_level > cap)
    throw ConfigError("max level " + std::to_string(c.max_level) + " exceeds the cap " + std::to_string(cap) +
                      " for " + std::string(domain_name(c.domain)));
  if (c.mode == RunMode::ContractionSweep && c.max_level < 1) throw ConfigError("a sweep needs max level >= 1");
  if (c.smoothing.empty()) c.smoothing = {c.mode == RunMode::Table1 ? std::pair{2, 2} : std::pair{1, 1}};
  for (auto [m1, m2] : c.smoothing)
    if (m1 < 0 || m2 < 0 || m1 + m2 == 0) throw ConfigError("smoothing counts must be >= 0 and not both zero");
  if (c.inner_nu < 1) throw ConfigError("inner nu must be >= 1");
  if (c.inner_damping < 0.0 || c.inner_damping >= 1.0) throw ConfigError("inner damping must lie in [0, 1)");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.mode == RunMode::ContractionSweep && c.cycle == CycleKind::FMG)
    throw ConfigError("contraction sweeps measure a cycle; use w, v or two-grid");
  if (c.mode == RunMode::Table1) {
    if (c.domain != DomainKind::UnitSquare) throw ConfigError("table1 mode runs on the unit square only");
    if (c.cycle == CycleKind::FMG) c.cycle = CycleKind::W;
  }
  if (!(c.fmg_tolerance > 0.0)) throw ConfigError("fmg tolerance must be positive");
  if (!(c.power_tol > 0.0)) throw ConfigError("power tolerance must be positive");
  return c;
}

std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Multigrid solver and contraction benchmark for the balanced optimal control saddle system"};
  app.set_config("--config", "", "key=value configuration file; command line flags take precedence");
  RunConfig c;
  std::string domain = "unit-square", cycle = "w", mode = "contraction-sweep", yd = "one";
  std::vector<std::string> betas, ms;
  int m1 = -1, m2 = -1;
  app.add_option("--domain", domain, "unit-square | pentagon | unit-cube | l-shape");
  app.add_option("--beta,--betas", betas, "regularization parameters (comma separated)")->delimiter(',');
  app.add_option("--max-level", c.max_level, "finest level");
  app.add_option("--cycle", cycle, "w | v | two-grid | fmg");
  auto* m_opt = app.add_option("--m", ms, "symmetric smoothing counts (comma separated)")->delimiter(',');
  auto* m1_opt = app.add_option("--m1", m1, "pre-smoothing steps");
  auto* m2_opt = app.add_option("--m2", m2, "post-smoothing steps");
  m_opt->excludes(m1_opt)->excludes(m2_opt);
  app.add_option("--inner-nu", c.inner_nu, "smoothing steps of the inner V-cycle");
  app.add_option("--inner-damping", c.inner_damping, "Jacobi weight of the inner V-cycle (0 = default)");
  app.add_option("--mode", mode, "solve | contraction-sweep | table1");
  app.add_option("--seed", c.seed, "seed for random start vectors");
  app.add_option("--out", c.output_path, "output file (CSV for sweeps and table1, JSON for solve)");
  app.add_option("--jobs", c.jobs, "parallel sweep cells");
  app.add_option("--yd", yd, "target state: one | bubble");
  app.add_option("--fmg-tol", c.fmg_tolerance, "relative residual tolerance of full multigrid");
  app.add_option("--power-tol", c.power_tol, "relative tolerance of the power iteration");
  app.add_option("--dense-threshold", c.dense_threshold, "dense norm evaluation up to this many dofs per variable");
  bool no_timing = false;
  app.add_flag("--no-timing", no_timing, "skip cycle timing in sweeps");
  app.add_option("--dump-mesh", c.mesh_dump, "write the finest mesh as JSON");
  app.add_option("--dump-matrix", c.matrix_dump, "write the finest saddle matrix as 1-based triplets");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  try {
    c.timing = !no_timing;
    c.domain = parse_domain(domain);
    c.cycle = parse_cycle(cycle);
    c.mode = parse_mode(mode);
    c.yd = parse_target(yd);
    if (!betas.empty()) {
      c.betas.clear();
      for (const std::string& b : betas)
        for (const std::string& part : split_list(b)) c.betas.push_back(std::stod(part));
    }
    for (const std::string& m : ms)
      for (const std::string& part : split_list(m)) {
        const int v = std::stoi(part);
        c.smoothing.emplace_back(v, v);
      }
    if (*m1_opt || *m2_opt) c.smoothing = {{*m1_opt ? m1 : 1, *m2_opt ? m2 : (*m1_opt ? m1 : 1)}};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }
  return c;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.mode) {
      case RunMode::ContractionSweep: return run_sweep(config, out, err);
      case RunMode::Solve: return run_solve(config, out, err, false);
      case RunMode::Table1: return run_solve(config, out, err, true);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const FmgError& e) {
    err << "numerical failure: " << e.what() << "; residual history:";
    for (double r : e.history()) err << ' ' << r;
    err << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    const std::optional<RunConfig> parsed = parse_command_line(argc, argv, out);
    if (!parsed) return 0;
    config = resolve(*parsed);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\nrun with --help for usage\n";
    return 2;
  }
  return run(config, out, err);
}

}  // namespace kktmg
