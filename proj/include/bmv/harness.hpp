#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include "bmv/laplace.hpp"
#include "bmv/matrix_io.hpp"
#include "bmv/report.hpp"
#include "bmv/words.hpp"

namespace bmv {

struct GridSpec {
  double start = 0.0;
  double step = 0.1;
  int count = 21;

  std::vector<double> values() const {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = start + i * step;
    return v;
  }
};

struct TrialConfig {
  std::uint64_t master_seed = 42;
  long trials = 200;
  std::vector<int> dims = {2, 3, 4};

  std::vector<double> p_float = {0.5, 1.3, 2.7, 3.0, 5.5, -1.2};
  std::vector<double> lemma1_p_float = {-2.5, 0.7, 1.5, 4.2};
  int p_exact_max = 8;   // t1i exact sweep over p = 1..max
  int t3_p_max = 6;      // theorem-3 sweeps
  int lemma1_p_max = 6;  // exact lane p = 1..max, r = 1..lemma1_r_max
  int lemma1_r_max = 3;
  int r_max = 6;         // theorem-2 derivative order cap (<= 8)
  int cm_max_order = 8;
  int k_max_simplex = 3;

  bool exact = false;
  double tol_rel = tol::margin_rtol;
  GridSpec lambda_grid;
  std::vector<CmGrid> cm_grids = default_cm_grids();
  long mc_samples = 20000;
  long search_trials = 100000;
  int cross_check_stride = 10;  // integral-rep cross-check every N-th trial
  int threads = 0;              // 0 = BMV_THREADS env or hardware
  int n_fixed = 0;              // 0 = rotate through dims
  int k_fixed = 0;              // 0 = sweep/rotate k where applicable
  int j_fixed = 0;              // 0 = sweep/rotate j where applicable
  bool emit_tables = false;     // write derivative tables for the t2 checks
  long emit_tables_cap = 5;     // at most this many tables per check
  std::string out_dir = "bmv_out";

  // fixed instance overrides (from --matrix-a/--matrix-b)
  std::optional<MatC> matrix_a, matrix_b;
  std::optional<RatMat> rat_a, rat_b;

  int p_cap_float = 12, p_cap_exact = 8, wedge_cap = 256;

  json echo() const {
    return json{{"master_seed", master_seed}, {"trials", trials},      {"dims", dims},
                {"p_float", p_float},         {"p_exact_max", p_exact_max},
                {"t3_p_max", t3_p_max},       {"r_max", r_max},        {"exact", exact},
                {"tol_rel", tol_rel},         {"mc_samples", mc_samples},
                {"search_trials", search_trials},
                {"grid", {{"start", lambda_grid.start},
                          {"step", lambda_grid.step},
                          {"count", lambda_grid.count}}}};
  }
};

inline const std::vector<std::string>& all_check_ids() {
  static const std::vector<std::string> ids = {"t1i",  "t2a",         "t2b",
                                               "t2c",  "lemma1",      "t3",
                                               "t4a",  "t4b",         "det_identity",
                                               "e2_diff", "det_word_search"};
  return ids;
}

inline bool is_check_id(const std::string& id) {
  for (const auto& x : all_check_ids())
    if (x == id) return true;
  return false;
}

namespace detail {

inline int harness_threads(const TrialConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("BMV_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Trial-level parallelism: contiguous block partition, results land in
/// per-trial slots, aggregation follows index order, so the output is
/// schedule-independent.
template <class F>
void parallel_for(long items, int threads, F&& fn) {
  if (items <= 0) return;
  threads = static_cast<int>(std::max<long>(1, std::min<long>(threads, items)));
  if (threads == 1) {
    for (long i = 0; i < items; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const long per = (items + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const long lo = w * per, hi = std::min(items, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

inline int trial_dim(const TrialConfig& cfg, long t) {
  if (cfg.n_fixed > 0) return cfg.n_fixed;
  return cfg.dims[static_cast<size_t>(t) % cfg.dims.size()];
}

inline std::uint64_t trial_seed(const TrialConfig& cfg, const std::string& id,
                                const char* role, long t) {
  return derive_seed(cfg.master_seed, stream_tag(id + "-" + role),
                     static_cast<std::uint64_t>(t));
}

inline Status classify(double margin, double tol, bool identity_like) {
  if (margin < -tol) return identity_like ? Status::fail : Status::finding;
  return Status::pass;
}

inline CheckReport error_report(const std::string& id, int n, std::uint64_t seed,
                                const char* kind, const std::string& what) {
  CheckReport r;
  r.id = id;
  r.n = n;
  r.seed = seed;
  r.status = Status::fail;
  r.method = kind;
  r.note = what;
  return r;
}

}  // namespace detail

/// One artifact = (relative path, file content); written by run_suite.
struct Artifact {
  std::string name;
  std::string content;
};

struct CheckRunResult {
  std::vector<CheckReport> reports;
  std::vector<Artifact> artifacts;
};

// ---------------------------------------------------------------------------
// per-check runners

namespace runners {

inline CheckRunResult t1i(const TrialConfig& cfg) {
  CheckRunResult out;
  std::vector<std::vector<CheckReport>> slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = detail::trial_dim(cfg, t);
    const std::uint64_t sa = detail::trial_seed(cfg, "t1i", "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, "t1i", "b", t);
    const int p_max = cfg.exact ? std::min(cfg.p_exact_max, cfg.p_cap_exact)
                                : std::min(cfg.p_exact_max, cfg.p_cap_float);
    for (int p = 1; p <= p_max; ++p) {
      detail::Timer timer;
      CheckReport rep;
      rep.id = "t1i";
      rep.n = n;
      rep.p = p;
      rep.seed = sa;
      try {
        if (cfg.exact) {
          RatMat a = cfg.rat_a ? *cfg.rat_a : sample_psd_rational(n, sa);
          RatMat b = cfg.rat_b ? *cfg.rat_b : sample_psd_rational(n, sb);
          auto table = coefficient_table_exact(a, b, p);
          int argmin = 0;
          for (int k = 0; k <= p; ++k)
            if (table.c[k] < table.c[argmin]) argmin = k;
          rep.k = argmin;
          rep.margin = to_double(table.c[argmin]);
          rep.scale = 0;
          for (const Rational& c : table.c)
            rep.scale = std::max(rep.scale, std::abs(to_double(c)));
          rep.tol = 0;
          rep.status = sign_of(table.c[argmin]) >= 0 ? Status::pass : Status::finding;
          rep.method = "exact-word-sum+interp";
        } else {
          PositiveMatrix a = cfg.matrix_a ? PositiveMatrix(HermitianMatrix(*cfg.matrix_a))
                                          : sample_psd(n, sa);
          PositiveMatrix b = cfg.matrix_b ? PositiveMatrix(HermitianMatrix(*cfg.matrix_b))
                                          : sample_psd(n, sb);
          auto table = coefficient_table(a, b, p);
          int argmin = 0;
          double worst = std::numeric_limits<double>::infinity();
          for (int k = 0; k <= p; ++k) {
            const double m = table.c[k] / std::max(1.0, table.scale[k]);
            if (m < worst) {
              worst = m;
              argmin = k;
            }
          }
          rep.k = argmin;
          rep.margin = table.c[argmin];
          rep.scale = std::max(1.0, table.scale[argmin]);
          rep.tol = cfg.tol_rel * rep.scale;
          rep.status = detail::classify(rep.margin, rep.tol, false);
          rep.method = table.method;
        }
      } catch (const ConsistencyError& e) {
        rep = detail::error_report("t1i", n, sa, "consistency", e.what());
        rep.p = p;
      } catch (const std::exception& e) {
        rep = detail::error_report("t1i", n, sa, "error", e.what());
        rep.p = p;
      }
      rep.ms = timer.ms();
      slots[t].push_back(std::move(rep));
    }
  });
  for (auto& s : slots)
    for (auto& r : s) out.reports.push_back(std::move(r));
  return out;
}

inline CheckRunResult theorem2(const std::string& id, const TrialConfig& cfg) {
  const char want_cls = id == "t2a" ? 'a' : id == "t2b" ? 'b' : 'c';
  std::vector<double> ps;
  for (double p : cfg.p_float)
    if ((want_cls == 'c') == (p <= 0)) ps.push_back(p);
  if (ps.empty()) throw UsageError("theorem2: no compatible p in config for " + id);
  CheckRunResult out;
  std::vector<std::vector<CheckReport>> slots(cfg.trials);
  std::vector<std::vector<Artifact>> artifact_slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = detail::trial_dim(cfg, t);
    const std::uint64_t sa = detail::trial_seed(cfg, id, "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, id, "b", t);
    const double p = ps[static_cast<size_t>(t) % ps.size()];
    detail::Timer timer;
    CheckReport rep;
    rep.id = id;
    rep.n = n;
    rep.p = p;
    rep.seed = sa;
    try {
      PositiveMatrix a = cfg.matrix_a ? PositiveMatrix(HermitianMatrix(*cfg.matrix_a))
                                      : sample_psd(n, sa, PsdSpec{20.0, 1.0, true});
      PositiveMatrix b = cfg.matrix_b ? PositiveMatrix(HermitianMatrix(*cfg.matrix_b))
                                      : sample_psd(n, sb, PsdSpec{20.0, 1.0, true});
      const int q = static_cast<int>(std::ceil(std::max(p, 0.0)));
      const int r_max = std::min({cfg.r_max, 8, std::max(q + 3, 3)});
      Theorem2Options opt;
      opt.tol_rel = cfg.tol_rel;
      opt.cross_check = cfg.cross_check_stride > 0 && t % cfg.cross_check_stride == 0;
      DerivativeTable table = theorem2_suite(a, b, p, r_max, cfg.lambda_grid.values(), opt);
      rep.method = opt.cross_check ? "spectral-fd+integral-rep" : "spectral-fd";
      if (cfg.emit_tables && t < cfg.emit_tables_cap) {
        const std::string stem = id + "_table_" + std::to_string(t);
        artifact_slots[t].push_back({stem + ".json", derivative_table_to_json(table).dump(2)});
        std::ostringstream csv;
        derivative_table_to_csv(csv, table);
        artifact_slots[t].push_back({stem + ".csv", csv.str()});
      }
      bool any = false;
      double worst = std::numeric_limits<double>::infinity();
      for (const DerivRow& row : table.rows) {
        if (row.cls != want_cls) continue;
        any = true;
        const double rel = row.margin / std::max(row.scale, 1.0);
        if (rel < worst) {
          worst = rel;
          rep.margin = row.margin;
          rep.scale = std::max(row.scale, 1.0);
          rep.lambda = row.lambda;
          rep.r = row.r;
        }
      }
      if (!any) {
        rep.status = Status::pass;
        rep.note = "no rows in class for this p";
      } else {
        rep.tol = cfg.tol_rel * rep.scale;
        rep.status = detail::classify(rep.margin, rep.tol, false);
      }
    } catch (const ConsistencyError& e) {
      rep = detail::error_report(id, n, sa, "consistency", e.what());
      rep.p = p;
    } catch (const std::exception& e) {
      rep = detail::error_report(id, n, sa, "error", e.what());
      rep.p = p;
    }
    rep.ms = timer.ms();
    slots[t].push_back(std::move(rep));
  });
  for (auto& s : slots)
    for (auto& r : s) out.reports.push_back(std::move(r));
  for (auto& s : artifact_slots)
    for (auto& a : s) out.artifacts.push_back(std::move(a));
  return out;
}

inline CheckRunResult lemma1(const TrialConfig& cfg) {
  CheckRunResult out;
  std::vector<std::vector<CheckReport>> slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = detail::trial_dim(cfg, t);
    const std::uint64_t sa = detail::trial_seed(cfg, "lemma1", "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, "lemma1", "b", t);
    if (cfg.exact) {
      RatMat a = cfg.rat_a ? *cfg.rat_a : sample_psd_rational(n, sa, 3, 1);
      RatMat b = cfg.rat_b ? *cfg.rat_b : sample_symmetric_rational(n, sb, 2);
      for (int p = 1; p <= cfg.lemma1_p_max; ++p)
        for (int r = 1; r <= cfg.lemma1_r_max; ++r) {
          detail::Timer timer;
          CheckReport rep;
          rep.id = "lemma1";
          rep.n = n;
          rep.p = p;
          rep.r = r;
          rep.seed = sa;
          rep.method = "exact-appendix-sums";
          try {
            Lemma1Report lem = lemma1_check_exact(a, b, p, r);
            rep.margin = lem.exact ? 0.0 : -lem.rel_gap;
            rep.scale = std::max(std::abs(lem.lhs), std::abs(lem.rhs));
            rep.tol = 0;
            rep.status = lem.exact ? Status::pass : Status::fail;
            if (!lem.exact) rep.note = "exact identity violated";
          } catch (const std::exception& e) {
            rep = detail::error_report("lemma1", n, sa, "error", e.what());
            rep.p = p;
            rep.r = r;
          }
          rep.ms = timer.ms();
          slots[t].push_back(std::move(rep));
        }
    } else {
      PositiveMatrix a = sample_psd(n, sa, PsdSpec{10.0, 1.0, true});
      HermitianMatrix b = sample_hermitian(n, sb, 0.25);
      for (double p : cfg.lemma1_p_float)
        for (int r = 1; r <= cfg.lemma1_r_max; ++r) {
          detail::Timer timer;
          CheckReport rep;
          rep.id = "lemma1";
          rep.n = n;
          rep.p = p;
          rep.r = r;
          rep.seed = sa;
          rep.method = "spectral-fd-two-sided";
          try {
            Lemma1Report lem = lemma1_check(a, b, p, r);
            rep.margin = -lem.rel_gap;
            rep.scale = std::max({std::abs(lem.lhs), std::abs(lem.rhs), 1.0});
            rep.tol = tol::lemma1_float_gap;
            rep.status = detail::classify(rep.margin, rep.tol, true);
            if (lem.degenerate) rep.note = "degenerate p = -r; raw derivatives reported";
          } catch (const std::exception& e) {
            rep = detail::error_report("lemma1", n, sa, "error", e.what());
            rep.p = p;
            rep.r = r;
          }
          rep.ms = timer.ms();
          slots[t].push_back(std::move(rep));
        }
    }
  });
  for (auto& s : slots)
    for (auto& r : s) out.reports.push_back(std::move(r));
  return out;
}

inline CheckRunResult t3(const TrialConfig& cfg) {
  CheckRunResult out;
  std::vector<std::vector<CheckReport>> slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = std::min(detail::trial_dim(cfg, t), 3);  // full sweeps stay desk-scale
    const std::uint64_t sa = detail::trial_seed(cfg, "t3", "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, "t3", "b", t);
    for (int p = 1; p <= cfg.t3_p_max; ++p) {
      detail::Timer timer;
      CheckReport rep;
      rep.id = "t3";
      rep.n = n;
      rep.p = p;
      rep.seed = sa;
      try {
        if (cfg.exact) {
          RatMat a = cfg.rat_a ? *cfg.rat_a : sample_psd_rational(n, sa);
          RatMat b = cfg.rat_b ? *cfg.rat_b : sample_psd_rational(n, sb);
          rep.method = "exact-word-ej(cyclic+full)";
          Rational worst;
          bool first = true;
          const int k_lo = cfg.k_fixed > 0 ? cfg.k_fixed : 1;
          const int k_hi = cfg.k_fixed > 0 ? cfg.k_fixed : p;
          const int j_lo = cfg.j_fixed > 0 ? cfg.j_fixed : 1;
          const int j_hi = cfg.j_fixed > 0 ? cfg.j_fixed : n;
          if (k_hi > p || j_hi > n) continue;
          for (int k = k_lo; k <= k_hi; ++k)
            for (int j = j_lo; j <= j_hi; ++j) {
              Rational red = theorem3_margin_exact(a, b, p, k, j, Reduction::cyclic_classes);
              Rational full = theorem3_margin_exact(a, b, p, k, j, Reduction::full_enumeration);
              if (red != full)
                throw ConsistencyError("t3: class-reduced and full sums differ at k=" +
                                       std::to_string(k) + ", j=" + std::to_string(j));
              if (first || red < worst) {
                worst = red;
                rep.k = k;
                rep.j = j;
                first = false;
              }
            }
          rep.margin = to_double(worst);
          rep.scale = std::max(1.0, std::abs(rep.margin));
          rep.tol = 0;
          rep.status = sign_of(worst) >= 0 ? Status::pass : Status::finding;
        } else {
          PositiveMatrix a = cfg.matrix_a ? PositiveMatrix(HermitianMatrix(*cfg.matrix_a))
                                          : sample_psd(n, sa);
          PositiveMatrix b = cfg.matrix_b ? PositiveMatrix(HermitianMatrix(*cfg.matrix_b))
                                          : sample_psd(n, sb);
          rep.method = "float-word-ej(cyclic)";
          double worst_rel = std::numeric_limits<double>::infinity();
          const int k_lo = cfg.k_fixed > 0 ? cfg.k_fixed : 1;
          const int k_hi = cfg.k_fixed > 0 ? cfg.k_fixed : p;
          const int j_lo = cfg.j_fixed > 0 ? cfg.j_fixed : 1;
          const int j_hi = cfg.j_fixed > 0 ? cfg.j_fixed : n;
          if (k_hi > p || j_hi > n) continue;
          for (int k = k_lo; k <= k_hi; ++k)
            for (int j = j_lo; j <= j_hi; ++j) {
              Margin m = theorem3_margin(a, b, p, k, j);
              const double rel = m.value / std::max(m.scale, 1.0);
              if (rel < worst_rel) {
                worst_rel = rel;
                rep.margin = m.value;
                rep.scale = std::max(m.scale, 1.0);
                rep.k = k;
                rep.j = j;
              }
            }
          rep.tol = cfg.tol_rel * rep.scale;
          rep.status = detail::classify(rep.margin, rep.tol, false);
        }
      } catch (const ConsistencyError& e) {
        rep = detail::error_report("t3", n, sa, "consistency", e.what());
        rep.p = p;
      } catch (const std::exception& e) {
        rep = detail::error_report("t3", n, sa, "error", e.what());
        rep.p = p;
      }
      rep.ms = timer.ms();
      slots[t].push_back(std::move(rep));
    }
  });
  for (auto& s : slots)
    for (auto& r : s) out.reports.push_back(std::move(r));
  return out;
}

inline CheckRunResult t4a(const TrialConfig& cfg) {
  CheckRunResult out;
  std::vector<CheckReport> slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = detail::trial_dim(cfg, t);
    const std::uint64_t sa = detail::trial_seed(cfg, "t4a", "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, "t4a", "b", t);
    detail::Timer timer;
    CheckReport rep;
    rep.id = "t4a";
    rep.n = n;
    rep.seed = sa;
    try {
      // rotate through the (j, k) lattice under the wedge cap
      std::vector<std::pair<int, int>> lattice;
      for (int j = cfg.j_fixed > 0 ? cfg.j_fixed : 1;
           j <= (cfg.j_fixed > 0 ? cfg.j_fixed : std::min(n, 2)); ++j)
        for (int k = cfg.k_fixed > 0 ? cfg.k_fixed : 1;
             k <= (cfg.k_fixed > 0 ? cfg.k_fixed : cfg.k_max_simplex); ++k)
          if (static_cast<double>(binomial_u64(n, j)) * (k + 1) <= cfg.wedge_cap)
            lattice.emplace_back(j, k);
      if (lattice.empty()) throw DomainError("t4a: no (j,k) under the wedge cap");
      const auto [j, k] = lattice[static_cast<size_t>(t) % lattice.size()];
      rep.j = j;
      rep.k = k;
      HermitianMatrix a = cfg.matrix_a ? HermitianMatrix(*cfg.matrix_a) : sample_hermitian(n, sa);
      PositiveMatrix b = cfg.matrix_b ? PositiveMatrix(HermitianMatrix(*cfg.matrix_b))
                                      : sample_psd(n, sb);
      SimplexOptions opt;
      opt.mc_samples = cfg.mc_samples;
      opt.seed = detail::trial_seed(cfg, "t4a", "mc", t);
      opt.wedge_cap = cfg.wedge_cap;
      SimplexIntegralResult res = simplex_integral_ej(a, b, k, j, opt);
      rep.margin = res.value_blockexp;
      rep.scale = std::max({res.scale, std::abs(res.value_blockexp), 1.0});
      rep.tol = cfg.tol_rel * rep.scale;
      rep.status = detail::classify(rep.margin, rep.tol, false);
      rep.method = "blockexp+mc";
      std::ostringstream note;
      note << "mc=" << res.value_mc << " stderr=" << res.mc_stderr
           << " samples=" << res.samples << " wedge_dim=" << res.wedge_dim;
      rep.note = note.str();
    } catch (const ConsistencyError& e) {
      rep = detail::error_report("t4a", n, sa, "consistency", e.what());
    } catch (const std::exception& e) {
      rep = detail::error_report("t4a", n, sa, "error", e.what());
    }
    rep.ms = timer.ms();
    slots[t] = std::move(rep);
  });
  out.reports = std::move(slots);
  return out;
}

inline CheckRunResult t4b(const std::string& id, const TrialConfig& cfg) {
  // shared by t4b (e_j CM margins) and e2_diff (the difference function)
  CheckRunResult out;
  std::vector<CheckReport> slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = std::max(detail::trial_dim(cfg, t), id == "e2_diff" ? 2 : 1);
    const std::uint64_t sa = detail::trial_seed(cfg, id, "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, id, "b", t);
    detail::Timer timer;
    CheckReport rep;
    rep.id = id;
    rep.n = n;
    rep.seed = sa;
    try {
      HermitianMatrix a = cfg.matrix_a ? HermitianMatrix(*cfg.matrix_a) : sample_hermitian(n, sa);
      PositiveMatrix b = cfg.matrix_b ? PositiveMatrix(HermitianMatrix(*cfg.matrix_b))
                                      : sample_psd(n, sb);
      if (id == "t4b") {
        const int j = cfg.j_fixed > 0 ? cfg.j_fixed : 1 + static_cast<int>(t % a.n());
        rep.j = j;
        CmCheckOutcome o = theorem4b_check(a, b, j, cfg.cm_grids, cfg.cm_max_order, cfg.tol_rel);
        rep.margin = o.worst_margin;
        rep.scale = std::max(o.worst_scale, 1e-300);
        rep.r = o.worst_order;
        rep.method = "cm-forward-diff+wedge-cross";
        std::ostringstream note;
        note << "worst at order " << o.worst_order << ", h=" << o.worst_h << ", wedge gap "
             << o.cross_gap << "; per-order worst:";
        for (double m : o.per_order_worst) note << ' ' << m;
        rep.note = note.str();
      } else {
        E2DifferenceOutcome o =
            e2_difference_check(a, b, cfg.cm_grids, cfg.cm_max_order, cfg.tol_rel);
        rep.margin = o.cm.worst_margin;
        rep.scale = std::max(o.cm.worst_scale, 1e-300);
        rep.r = o.cm.worst_order;
        rep.method = "cm-forward-diff+e2-identity";
        std::ostringstream note;
        note << "per-order worst:";
        for (double m : o.cm.per_order_worst) note << ' ' << m;
        rep.note = note.str();
      }
      rep.tol = cfg.tol_rel * std::max(rep.scale, 1e-300);
      rep.status = detail::classify(rep.margin, rep.tol, false);
    } catch (const ConsistencyError& e) {
      rep = detail::error_report(id, n, sa, "consistency", e.what());
    } catch (const std::exception& e) {
      rep = detail::error_report(id, n, sa, "error", e.what());
    }
    rep.ms = timer.ms();
    slots[t] = std::move(rep);
  });
  out.reports = std::move(slots);
  return out;
}

inline CheckRunResult det_identity(const TrialConfig& cfg) {
  CheckRunResult out;
  std::vector<CheckReport> slots(cfg.trials);
  detail::parallel_for(cfg.trials, detail::harness_threads(cfg), [&](long t) {
    const int n = detail::trial_dim(cfg, t);
    const std::uint64_t sa = detail::trial_seed(cfg, "det_identity", "a", t);
    const std::uint64_t sb = detail::trial_seed(cfg, "det_identity", "b", t);
    const double lambda = -1.0 + 2.0 * static_cast<double>(t % 21) / 20.0;
    detail::Timer timer;
    CheckReport rep;
    rep.id = "det_identity";
    rep.n = n;
    rep.seed = sa;
    rep.lambda = lambda;
    rep.method = "lu-det-vs-exp-trace";
    try {
      HermitianMatrix a =
          cfg.matrix_a ? HermitianMatrix(*cfg.matrix_a) : sample_hermitian(n, sa);
      HermitianMatrix b =
          cfg.matrix_b ? HermitianMatrix(*cfg.matrix_b) : sample_hermitian(n, sb);
      DetIdentityReport d = det_identity_check(a, b, lambda);
      rep.margin = -d.gap;
      rep.scale = std::max(std::abs(d.lhs), std::abs(d.rhs));
      rep.tol = tol::det_exp_identity;
      rep.status = detail::classify(rep.margin, rep.tol, true);
    } catch (const std::exception& e) {
      rep = detail::error_report("det_identity", n, sa, "error", e.what());
      rep.lambda = lambda;
    }
    rep.ms = timer.ms();
    slots[t] = std::move(rep);
  });
  out.reports = std::move(slots);
  return out;
}

inline CheckRunResult det_word_search(const TrialConfig& cfg) {
  CheckRunResult out;
  const int n = cfg.n_fixed > 0 ? cfg.n_fixed : 3;
  const std::uint64_t seed = derive_seed(cfg.master_seed, stream_tag("det_word_search"));
  detail::Timer timer;
  CheckReport rep;
  rep.id = "det_word_search";
  rep.n = n;
  rep.seed = seed;
  rep.method = "random+coordinate-descent";
  DetSearchResult res = det_anticommutator_search(n, cfg.search_trials, seed);
  rep.margin = res.best_det;
  rep.scale = std::max(1.0, std::abs(res.best_det));
  rep.tol = 0;
  rep.status = Status::pass;  // not finding a negative value is an outcome, not an error
  std::ostringstream note;
  note << (res.negative_found ? "negative determinant found" : "no negative determinant")
       << " after " << res.trials_run << " trials, " << res.descent_steps
       << " descent steps (trial " << res.trial_index << ")";
  rep.note = note.str();
  rep.ms = timer.ms();
  out.reports.push_back(rep);
  if (res.negative_found) {
    json manifest{{"seed", seed},
                  {"trial_index", res.trial_index},
                  {"det", res.best_det},
                  {"n", n},
                  {"matrix_a", "det_word_cert_a.json"},
                  {"matrix_b", "det_word_cert_b.json"}};
    out.artifacts.push_back(
        {"det_word_cert_a.json", matrix_to_json(MatC(res.a.cast<cxd>())).dump(2)});
    out.artifacts.push_back(
        {"det_word_cert_b.json", matrix_to_json(MatC(res.b.cast<cxd>())).dump(2)});
    out.artifacts.push_back({"det_word_cert_manifest.json", manifest.dump(2)});
  }
  return out;
}

}  // namespace runners

inline CheckRunResult run_check(const std::string& id, const TrialConfig& cfg) {
  if (!is_check_id(id)) throw UsageError("unknown check id: " + id);
  if (id == "t1i") return runners::t1i(cfg);
  if (id == "t2a" || id == "t2b" || id == "t2c") return runners::theorem2(id, cfg);
  if (id == "lemma1") return runners::lemma1(cfg);
  if (id == "t3") return runners::t3(cfg);
  if (id == "t4a") return runners::t4a(cfg);
  if (id == "t4b" || id == "e2_diff") return runners::t4b(id, cfg);
  if (id == "det_identity") return runners::det_identity(cfg);
  return runners::det_word_search(cfg);
}

// ---------------------------------------------------------------------------
// suite orchestration

inline RunManifest run_suite(const std::vector<std::string>& ids, const TrialConfig& cfg,
                             std::vector<CheckReport>* all_reports = nullptr) {
  detail::Timer timer;
  RunManifest manifest;
  manifest.config_echo = cfg.echo();
  std::vector<CheckReport> reports;
  std::vector<Artifact> artifacts;
  for (const std::string& id : ids) {
    CheckRunResult res = run_check(id, cfg);
    for (CheckReport& r : res.reports) {
      accumulate(manifest, r);
      reports.push_back(std::move(r));
    }
    for (auto& a : res.artifacts) artifacts.push_back(std::move(a));
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  write_json_file((fs::path(cfg.out_dir) / "reports.json").string(), reports_to_json(reports));
  {
    std::ofstream csv(fs::path(cfg.out_dir) / "reports.csv");
    emit_reports_csv(csv, reports);
  }
  for (const Artifact& a : artifacts) {
    std::ofstream f(fs::path(cfg.out_dir) / a.name);
    f << a.content;
    manifest.certificates.push_back(a.name);
  }
  bool any_fail = false, any_finding = false;
  for (const auto& [id, t] : manifest.totals) {
    any_fail = any_fail || t.fail > 0;
    any_finding = any_finding || t.finding > 0;
  }
  manifest.exit_code = any_fail      ? exit_code::internal
                       : any_finding ? exit_code::finding
                                     : exit_code::ok;
  manifest.wall_ms = timer.ms();
  write_json_file((fs::path(cfg.out_dir) / "manifest.json").string(),
                  manifest_to_json(manifest));
  if (all_reports) *all_reports = std::move(reports);
  return manifest;
}

// ---------------------------------------------------------------------------
// margin minimization search

struct SearchOutcome {
  CheckReport best;
  double best_margin = std::numeric_limits<double>::infinity();
  std::vector<std::string> certificate_files;
};

namespace detail {

/// Coordinate perturbation descent over the factor entries of (A, B),
/// minimizing a margin callable. PSD structure is preserved because A, B are
/// rebuilt as G^T G from the perturbed factors.
template <class MarginFn>
double factor_descent(MatR& ga, MatR& gb, MarginFn&& margin, int sweeps = 40) {
  double best = margin(ga.transpose() * ga, gb.transpose() * gb);
  double step = 0.25;
  const int n = static_cast<int>(ga.rows());
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (int which = 0; which < 2; ++which) {
      MatR& g = which == 0 ? ga : gb;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (double dir : {1.0, -1.0}) {
            const double old = g(i, j);
            g(i, j) = old + dir * step * (std::abs(old) + 0.1);
            const double m = margin(ga.transpose() * ga, gb.transpose() * gb);
            if (m < best) {
              best = m;
              improved = true;
            } else {
              g(i, j) = old;
            }
          }
    }
    if (!improved) {
      step *= 0.5;
      if (step < 1e-4) break;
    }
  }
  return best;
}

}  // namespace detail

inline SearchOutcome search_min(const std::string& target, const TrialConfig& cfg) {
  SearchOutcome out;
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  if (target == "det_word_search") {
    CheckRunResult res = runners::det_word_search(cfg);
    out.best = res.reports.front();
    out.best_margin = out.best.margin;
    for (const Artifact& a : res.artifacts) {
      std::ofstream f(fs::path(cfg.out_dir) / a.name);
      f << a.content;
      out.certificate_files.push_back(a.name);
    }
    return out;
  }
  if (!is_check_id(target)) throw UsageError("unknown search target: " + target);

  // generic random-restart + descent over real PSD pairs (hermitian A for the
  // CM targets is built from the symmetric part of the factor)
  const int n = cfg.n_fixed > 0 ? cfg.n_fixed : 3;
  auto margin_of = [&](const MatR& a_raw, const MatR& b_raw) -> double {
    MatC a = a_raw.cast<cxd>(), b = b_raw.cast<cxd>();
    try {
      if (target == "t3") {
        PositiveMatrix pa{HermitianMatrix(a)}, pb{HermitianMatrix(b)};
        const int p = std::min(cfg.t3_p_max, 5);
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= p; ++k)
          for (int j = 1; j <= n; ++j) {
            Margin m = theorem3_margin(pa, pb, p, k, j);
            worst = std::min(worst, m.value / std::max(m.scale, 1.0));
          }
        return worst;
      }
      if (target == "t4b" || target == "e2_diff") {
        HermitianMatrix ha(a - MatC::Identity(n, n) * 0.5 * a.trace());  // allow indefinite A
        PositiveMatrix pb{HermitianMatrix(b)};
        if (target == "t4b") {
          CmCheckOutcome o =
              theorem4b_check(ha, pb, std::min(2, n), cfg.cm_grids, cfg.cm_max_order);
          return o.worst_margin / std::max(o.worst_scale, 1.0);
        }
        E2DifferenceOutcome o = e2_difference_check(ha, pb, cfg.cm_grids, cfg.cm_max_order);
        return o.cm.worst_margin / std::max(o.cm.worst_scale, 1.0);
      }
      throw UsageError("search target not supported: " + target);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();  // stepped outside the domain
    }
  };

  MatR best_ga, best_gb;
  double best = std::numeric_limits<double>::infinity();
  const long restarts = std::max<long>(1, cfg.search_trials / 1000);
  for (long t = 0; t < restarts; ++t) {
    Rng rng(derive_seed(cfg.master_seed, stream_tag("search-" + target),
                        static_cast<std::uint64_t>(t)));
    MatR ga(n, n), gb(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        ga(i, j) = rng.uniform(-1, 1);
        gb(i, j) = rng.uniform(-1, 1);
      }
    const double m = margin_of(ga.transpose() * ga, gb.transpose() * gb);
    if (m < best) {
      best = m;
      best_ga = ga;
      best_gb = gb;
    }
  }
  best = detail::factor_descent(best_ga, best_gb, margin_of);
  out.best_margin = best;
  out.best.id = target;
  out.best.n = n;
  out.best.seed = cfg.master_seed;
  out.best.margin = best;
  out.best.scale = 1.0;
  out.best.tol = cfg.tol_rel;
  out.best.status = best < -cfg.tol_rel ? Status::finding : Status::pass;
  out.best.method = "random-restart+factor-descent";
  const MatR a_best = best_ga.transpose() * best_ga, b_best = best_gb.transpose() * best_gb;
  const std::string fa = "search_" + target + "_a.json", fb = "search_" + target + "_b.json";
  write_json_file((fs::path(cfg.out_dir) / fa).string(), matrix_to_json(MatC(a_best.cast<cxd>())));
  write_json_file((fs::path(cfg.out_dir) / fb).string(), matrix_to_json(MatC(b_best.cast<cxd>())));
  out.certificate_files = {fa, fb};
  return out;
}

// ---------------------------------------------------------------------------
// self-test: planted violations must be detected

/// Runs deliberately broken inputs through the real pipelines. Returns the
/// finding exit code when every planted violation is detected (and a control
/// check still passes); anything else is an internal error.
inline int selftest(const TrialConfig& cfg, std::vector<CheckReport>* out_reports = nullptr) {
  std::vector<CheckReport> reports;

  // planted non-CM function through the CM margin pipeline
  {
    CheckReport rep;
    rep.id = "e2_diff";
    rep.n = 0;
    rep.seed = cfg.master_seed;
    rep.method = "selftest-planted-noncm";
    CmGrid g{0.0, 0.2, 64};
    auto values = tabulate([](double l) { return std::sin(l) + 2.0; }, g);
    double worst = std::numeric_limits<double>::infinity(), scale = 1.0;
    int worst_order = -1;
    for (const CmOrderMargin& m : cm_margins(values, g, cfg.cm_max_order))
      if (m.worst_margin / std::max(m.scale, 1.0) < worst / std::max(scale, 1.0)) {
        worst = m.worst_margin;
        scale = m.scale;
        worst_order = m.order;
      }
    rep.margin = worst;
    rep.scale = scale;
    rep.r = worst_order;
    rep.tol = cfg.tol_rel * std::max(scale, 1.0);
    rep.status = detail::classify(rep.margin, rep.tol, false);
    rep.note = "planted sin(lambda)+2";
    reports.push_back(rep);
  }

  // planted sign flip on a genuine theorem-3 margin
  {
    CheckReport rep;
    rep.id = "t3";
    rep.n = 3;
    rep.seed = derive_seed(cfg.master_seed, stream_tag("selftest-t3"));
    rep.method = "selftest-planted-signflip";
    PositiveMatrix a = sample_psd(3, derive_seed(rep.seed, 1));
    PositiveMatrix b = sample_psd(3, derive_seed(rep.seed, 2));
    Margin m = theorem3_margin(a, b, 4, 2, 2);
    rep.p = 4;
    rep.k = 2;
    rep.j = 2;
    rep.margin = -m.value;  // the plant
    rep.scale = std::max(m.scale, 1.0);
    rep.tol = cfg.tol_rel * rep.scale;
    rep.status = detail::classify(rep.margin, rep.tol, false);
    rep.note = "planted sign flip";
    reports.push_back(rep);
  }

  // control: an honest check must still pass
  {
    CheckReport rep;
    rep.id = "det_identity";
    rep.n = 3;
    rep.seed = derive_seed(cfg.master_seed, stream_tag("selftest-control"));
    rep.method = "selftest-control";
    HermitianMatrix a = sample_hermitian(3, derive_seed(rep.seed, 1));
    HermitianMatrix b = sample_hermitian(3, derive_seed(rep.seed, 2));
    DetIdentityReport d = det_identity_check(a, b, 0.4);
    rep.lambda = 0.4;
    rep.margin = -d.gap;
    rep.scale = std::max(std::abs(d.lhs), std::abs(d.rhs));
    rep.tol = tol::det_exp_identity;
    rep.status = detail::classify(rep.margin, rep.tol, true);
    reports.push_back(rep);
  }

  const bool planted_detected = reports[0].status == Status::finding &&
                                reports[1].status == Status::finding;
  const bool control_ok = reports[2].status == Status::pass;
  if (out_reports) *out_reports = std::move(reports);
  return (planted_detected && control_ok) ? exit_code::finding : exit_code::internal;
}

}  // namespace bmv
