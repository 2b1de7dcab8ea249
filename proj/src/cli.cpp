#include "wchj/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wchj/analysis.hpp"
#include "wchj/error.hpp"
#include "wchj/parallel.hpp"
#include "wchj/reference.hpp"

namespace wchj {

namespace {

std::string out_dir(const RunConfig& cfg, const CliOptions& opt) {
  return opt.out_dir ? *opt.out_dir : cfg.output.dir;
}

void write_file(const std::string& dir, const std::string& name, const std::string& body) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Config, "cannot write '" + path + "'");
  f << body;
}

int status_of(Verdict v, bool strict) {
  if (v == Verdict::Fail) return kExitCheckFailure;
  if (v == Verdict::InconclusiveAtFloor && strict) return kExitCheckFailure;
  return kExitPass;
}

void apply_threads(const CliOptions& opt) {
  if (opt.threads) set_thread_count(*opt.threads);
}

std::string field_csv(const GridField& f) {
  std::ostringstream os;
  write_csv(f, os);
  return os.str();
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->code()) {
      case ErrorCode::NonFinite:
      case ErrorCode::BlowUp:
        return kExitNumeric;
      case ErrorCode::WindowBoundaryTouched:
      case ErrorCode::SearchWindowTooSmall:
      case ErrorCode::OutOfDomain:
      case ErrorCode::InsufficientTimeLevels:
        return kExitCheckFailure;
      default:
        return kExitUsage;
    }
  }
  return kExitUsage;
}

int cmd_check_coupling(const RunConfig& cfg, const CliOptions& opt, std::ostream& out) {
  apply_threads(opt);
  out << "check-coupling source=" << cfg.source << "\n";
  if (cfg.coupling_raw) {
    try {
      CouplingMatrix::validate(*cfg.coupling_raw);
    } catch (const CouplingError& e) {
      out << "  [fail] " << to_string(e.code()) << " at (" << e.row() << "," << e.col()
          << "): " << e.what() << "\n  verdict: fail\n";
      return kExitCheckFailure;
    }
  }
  const SystemSpec& sys = cfg.scenario.sys;
  bool ok = true;
  auto report = [&](const std::string& where, const ExpAudit& a) {
    out << "  " << where << ": taus=" << a.taus << " min_entry=" << format_number(a.min_entry)
        << " row_sums=[" << format_number(a.min_row_sum) << ", " << format_number(a.max_row_sum)
        << "] semigroup_defect=" << format_number(a.semigroup_defect)
        << " decay_violation=" << format_number(a.decay_violation) << " ("
        << (a.passed() ? "pass" : "fail") << ")\n";
    ok = ok && a.passed();
  };
  out << "  tolerances: entries/row sums " << format_number(kMatrixTolerance)
      << ", semigroup 1e-10\n";
  if (sys.constant_coupling()) {
    const Matrix& b = sys.matrix().entries();
    std::ostringstream m;
    for (int i = 0; i < b.rows(); ++i) {
      m << (i ? "; " : "");
      for (int j = 0; j < b.cols(); ++j) m << (j ? " " : "") << format_number(b(i, j));
    }
    out << "  B = [" << m.str() << "]  ||B||_inf=" << format_number(sys.matrix().norm_inf())
        << "\n";
    report("exp audit", audit_exponential(sys.matrix()));
  } else {
    const auto& field = std::get<CouplingField>(sys.coupling);
    out << "  B(x) field '" << field.name()
        << "' sup ||B(x)||_inf=" << format_number(field.norm_inf_bound()) << "\n";
    for (int k = 0; k < 8; ++k) {
      const Point x{(k + 0.5) / 8.0, 0.5};
      report("exp audit x=" + format_number(x[0]), audit_exponential(field.at(x)));
    }
  }
  out << "  verdict: " << (ok ? "pass" : "fail") << "\n";
  return ok ? kExitPass : kExitCheckFailure;
}

int cmd_iterate(const RunConfig& cfg, const CliOptions& opt, std::ostream& out) {
  apply_threads(opt);
  const Scenario& s = cfg.scenario;
  const GridField u0 = s.u0();
  IterationLog log;
  GridField w = u0;
  std::string schedule;
  if (!cfg.run.partition.empty()) {
    w = iterate_partition(u0, cfg.run.partition, s.sys, s.scheme, &log);
    schedule = "partition of " + std::to_string(cfg.run.partition.size()) + " steps";
  } else {
    w = iterate_dyadic(u0, cfg.final_time(), cfg.run.n, s.sys, s.scheme, &log);
    schedule = "dyadic n=" + std::to_string(cfg.run.n);
  }
  const std::string dir = out_dir(cfg, opt);
  std::ostringstream diag;
  diag << "iterate scenario=" << s.name << " operator=" << to_string(s.scheme.op)
       << " T=" << format_number(cfg.final_time()) << " " << schedule << "\n";
  diag << "  grid: " << s.grid.describe() << "\n";
  diag << "  steps=" << log.steps << " boundary_touches=" << log.touches
       << " min_edge_margin=" << format_number(log.min_edge_margin)
       << " velocity_bound=" << format_number(log.max_velocity_bound) << "\n";
  diag << "  sup_norm=" << format_number(w.sup_norm()) << " lipschitz="
       << format_number(lipschitz_estimate(w)) << "\n";
  if (dir.empty()) {
    out << field_csv(w);
  } else {
    out << diag.str() << "  wrote " << dir << "/field.csv\n";
    write_file(dir, "field.csv", field_csv(w));
    write_file(dir, "iterate.txt", diag.str());
  }
  return kExitPass;
}

int cmd_reference(const RunConfig& cfg, const CliOptions& opt, std::ostream& out) {
  apply_threads(opt);
  const Scenario& s = cfg.scenario;
  const ReferenceRun run = lf_solve(s.u0(), cfg.final_time(), s.sys, s.cfl);
  std::ostringstream diag;
  diag << "reference scenario=" << s.name << " T=" << format_number(cfg.final_time()) << "\n";
  diag << "  grid: " << s.grid.describe() << "\n";
  diag << "  steps=" << run.steps << " max_dt=" << format_number(run.dt)
       << " max_alpha=" << format_number(run.alpha)
       << " max_cfl_ratio=" << format_number(run.cfl_ratio) << " (limit "
       << format_number(s.cfl) << ")\n";
  diag << "  sup_norm=" << format_number(run.final_field.sup_norm()) << "\n";
  const std::string dir = out_dir(cfg, opt);
  if (dir.empty()) {
    out << field_csv(run.final_field);
  } else {
    out << diag.str() << "  wrote " << dir << "/reference.csv\n";
    write_file(dir, "reference.csv", field_csv(run.final_field));
    write_file(dir, "reference.txt", diag.str());
  }
  return kExitPass;
}

int cmd_converge(const RunConfig& cfg, const CliOptions& opt, std::ostream& out) {
  apply_threads(opt);
  const ConvergenceReport rep = run_convergence(cfg.scenario, cfg.run.n_min, cfg.run.n_max);
  out << rep.text(cfg.output.timings);
  const std::string dir = out_dir(cfg, opt);
  write_file(dir, "converge.json", rep.json(cfg.output.timings) + "\n");
  write_file(dir, "converge.csv", rep.csv());
  return status_of(rep.verdict, opt.strict);
}

int cmd_properties(const RunConfig& cfg, const CliOptions& opt, std::ostream& out) {
  apply_threads(opt);
  PropertyOptions po;
  po.random_fields = cfg.run.random_fields;
  po.random_m = cfg.run.random_m;
  po.random_t = cfg.run.random_t;
  const std::uint64_t seed = opt.seed ? *opt.seed : cfg.run.seed;
  const PropertyReport rep = run_properties(cfg.scenario, seed, po);
  out << rep.text();
  const std::string dir = out_dir(cfg, opt);
  write_file(dir, "properties.json", rep.json() + "\n");
  write_file(dir, "properties.csv", rep.csv());
  return status_of(rep.verdict(), opt.strict);
}

int cmd_appendix(const RunConfig& cfg, const CliOptions& opt, std::ostream& out) {
  apply_threads(opt);
  std::vector<double> ts = cfg.run.times;
  if (ts.empty()) ts = {0.25, 0.5, 1.0};
  const AppendixReport rep = run_appendix(cfg.scenario, ts);
  out << rep.text();
  const std::string dir = out_dir(cfg, opt);
  write_file(dir, "appendix.json", rep.json() + "\n");
  return status_of(rep.verdict, opt.strict);
}

RunConfig default_config(const std::string& command) {
  RunConfig cfg;
  cfg.scenario = make_scenario(command == "appendix" ? "appendix-affine" : "appendix-torus");
  cfg.source = "<default>";
  return cfg;
}

int run_command(const std::string& command, const std::optional<std::string>& config_path,
                const CliOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = config_path ? load_config(*config_path) : default_config(command);
    if (opt.seed) cfg.run.seed = *opt.seed;
    if (!cfg.coupling_error.empty() && command != "check-coupling") {
      err << "error: " << cfg.coupling_error << "\n";
      return kExitUsage;
    }
    if (command == "check-coupling") return cmd_check_coupling(cfg, opt, out);
    if (command == "iterate") return cmd_iterate(cfg, opt, out);
    if (command == "reference") return cmd_reference(cfg, opt, out);
    if (command == "converge") return cmd_converge(cfg, opt, out);
    if (command == "properties") return cmd_properties(cfg, opt, out);
    if (command == "appendix") return cmd_appendix(cfg, opt, out);
    err << "error: unknown subcommand '" << command << "'\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace wchj
