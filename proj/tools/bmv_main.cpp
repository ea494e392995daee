// bmv - numerical and exact verification of BMV-implication trace
// inequalities: coefficient positivity of Tr(A+lB)^p, derivative sign
// patterns, the inverse-power duality identity, word sums of elementary
// symmetric functions, and complete monotonicity of e_j(e^{A-lB}).

#include <CLI11.hpp>
#include <iostream>

#include "bmv/harness.hpp"

namespace {

using namespace bmv;

void add_common_options(CLI::App* cmd, TrialConfig& cfg, std::string& grid_spec) {
  cmd->add_option("--seed", cfg.master_seed, "master seed (per-trial seeds derive from it)");
  cmd->add_option("--trials", cfg.trials, "trials per check");
  cmd->add_option("--n", cfg.n_fixed, "fix the dimension (default: rotate 2..4)");
  cmd->add_option("--tol", cfg.tol_rel, "relative margin tolerance (float lane)");
  cmd->add_option("--mc-samples", cfg.mc_samples, "Monte Carlo samples per simplex integral");
  cmd->add_option("--threads", cfg.threads, "worker threads (or env BMV_THREADS)");
  cmd->add_option("--out", cfg.out_dir, "output directory for reports and certificates");
  cmd->add_option("--grid", grid_spec, "lambda grid as start:step:count (default 0:0.1:21)");
  cmd->add_option("--r", cfg.r_max, "max derivative order (<= 8)");
  cmd->add_option("--p", cfg.p_float, "exponents for the derivative checks")->expected(-1);
  cmd->add_option("--p-max", cfg.p_exact_max, "max integer p for coefficient checks");
  cmd->add_option("--k", cfg.k_fixed, "fix k (word B-count / insertion count)");
  cmd->add_option("--j", cfg.j_fixed, "fix the elementary-symmetric order j");
  cmd->add_option("--k-max", cfg.k_max_simplex, "max insertion count for simplex integrals");
  cmd->add_option("--cm-order", cfg.cm_max_order, "max CM difference order");
  cmd->add_flag("--exact", cfg.exact, "exact-rational lane where available");
  cmd->add_flag("--emit-tables", cfg.emit_tables, "write derivative tables for t2 checks");
}

void apply_grid(const std::string& spec, TrialConfig& cfg) {
  if (spec.empty()) return;
  GridSpec g;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &g.start, &g.step, &g.count) != 3 ||
      g.count < 1 || g.step <= 0)
    throw UsageError("bad --grid, expected start:step:count");
  cfg.lambda_grid = g;
}

void load_fixed_matrices(const std::string& path_a, const std::string& path_b,
                         TrialConfig& cfg) {
  auto load = [&](const std::string& path, std::optional<MatC>& fm,
                  std::optional<RatMat>& rm) {
    if (path.empty()) return;
    json j = read_json_file(path);
    if (json_is_rational_matrix(j))
      rm = rational_matrix_from_json(j);
    else
      fm = matrix_from_json(j);
  };
  load(path_a, cfg.matrix_a, cfg.rat_a);
  load(path_b, cfg.matrix_b, cfg.rat_b);
}

int print_summary(const RunManifest& m) {
  for (const auto& [id, t] : m.totals) {
    std::cout << id << ": pass=" << t.pass << " finding=" << t.finding << " fail=" << t.fail;
    auto it = m.worst_margin.find(id);
    if (it != m.worst_margin.end()) std::cout << " worst_margin=" << it->second;
    std::cout << "\n";
  }
  std::cout << "wall_ms=" << m.wall_ms << " exit=" << m.exit_code << "\n";
  return m.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verification suite for BMV-implication trace inequalities"};
  app.require_subcommand(1);

  TrialConfig cfg;
  std::string grid_spec, check_id, target, matrix_a_path, matrix_b_path;
  std::string report_in, report_format = "json", report_out = "bmv_out";

  CLI::App* verify = app.add_subcommand("verify", "run a check (or 'all') over seeded trials");
  verify->add_option("check", check_id, "check id or 'all'")->required();
  add_common_options(verify, cfg, grid_spec);
  verify->add_option("--matrix-a", matrix_a_path, "fixed A matrix (JSON)");
  verify->add_option("--matrix-b", matrix_b_path, "fixed B matrix (JSON)");

  CLI::App* search = app.add_subcommand("search", "minimize a check margin");
  search->add_option("target", target, "search target check id")->required();
  search->add_option("--trials", cfg.search_trials, "search trial budget");
  search->add_option("--seed", cfg.master_seed, "master seed");
  search->add_option("--n", cfg.n_fixed, "dimension");
  search->add_option("--out", cfg.out_dir, "output directory");

  CLI::App* report = app.add_subcommand("report", "re-emit a reports.json in json or csv");
  report->add_option("--in", report_in, "input reports.json")->required();
  report->add_option("--format", report_format, "json or csv");
  report->add_option("--out", report_out, "output directory");

  CLI::App* self = app.add_subcommand("selftest", "planted-violation detection check");
  self->add_option("--out", cfg.out_dir, "output directory");
  self->add_option("--seed", cfg.master_seed, "master seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      apply_grid(grid_spec, cfg);
      load_fixed_matrices(matrix_a_path, matrix_b_path, cfg);
      std::vector<std::string> ids;
      if (check_id == "all")
        ids = all_check_ids();
      else if (is_check_id(check_id))
        ids = {check_id};
      else
        throw bmv::UsageError("unknown check id: " + check_id);
      RunManifest manifest = run_suite(ids, cfg);
      return print_summary(manifest);
    }
    if (search->parsed()) {
      SearchOutcome out = search_min(target, cfg);
      std::cout << "best margin " << out.best_margin << " (" << to_string(out.best.status)
                << ")\n";
      for (const auto& f : out.certificate_files) std::cout << "certificate: " << f << "\n";
      return out.best.status == Status::finding ? exit_code::finding : exit_code::ok;
    }
    if (report->parsed()) {
      json j = read_json_file(report_in);
      auto reports = reports_from_json(j);
      std::filesystem::create_directories(report_out);
      if (report_format == "json") {
        write_json_file((std::filesystem::path(report_out) / "reports.json").string(),
                        reports_to_json(reports));
      } else if (report_format == "csv") {
        std::ofstream csv(std::filesystem::path(report_out) / "reports.csv");
        emit_reports_csv(csv, reports);
      } else {
        throw bmv::UsageError("unknown format: " + report_format);
      }
      std::cout << reports.size() << " reports emitted\n";
      return exit_code::ok;
    }
    // selftest
    std::vector<CheckReport> reports;
    const int code = selftest(cfg, &reports);
    std::filesystem::create_directories(cfg.out_dir);
    write_json_file((std::filesystem::path(cfg.out_dir) / "selftest_reports.json").string(),
                    reports_to_json(reports));
    for (const CheckReport& r : reports)
      std::cout << r.id << " [" << r.method << "]: " << to_string(r.status) << "\n";
    std::cout << (code == exit_code::finding ? "planted violations detected\n"
                                             : "selftest FAILED to detect planted violations\n");
    return code;
  } catch (const bmv::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_code::usage;
  } catch (const bmv::ConsistencyError& e) {
    std::cerr << "internal consistency error: " << e.what() << "\n";
    return exit_code::internal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::internal;
  }
}
