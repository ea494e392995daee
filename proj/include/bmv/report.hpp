#pragma once

#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmv/common.hpp"
#include "bmv/derivs.hpp"

namespace bmv {

using nlohmann::json;

namespace exit_code {
inline constexpr int ok = 0;        // every check passed
inline constexpr int internal = 1;  // oracle/path disagreement: a bug, not math
inline constexpr int usage = 2;     // bad configuration or CLI input
inline constexpr int finding = 10;  // margin below tolerance: potential counterexample
}  // namespace exit_code

enum class Status { pass, fail, finding };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    default: return "finding";
  }
}

inline Status status_from_string(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "finding") return Status::finding;
  throw UsageError("unknown status: " + s);
}

/// Universal result record. `margin` is the sign-adjusted quantity whose
/// nonnegativity the check asserts; identity-style checks store the negated
/// gap so the uniform rule "margin < -tol is bad" applies everywhere.
/// A bad margin surfaces as `finding` for inequality checks (potential
/// counterexample) and as `fail` for identity/consistency checks (a bug).
struct CheckReport {
  std::string id;
  int n = 0;
  std::optional<double> p;
  std::optional<int> k, j, r;
  std::optional<double> lambda;
  std::uint64_t seed = 0;
  double margin = 0;
  double scale = 0;
  double tol = 0;
  Status status = Status::pass;
  std::string method;
  double ms = 0;
  std::string note;

  bool operator==(const CheckReport&) const = default;
};

inline json report_to_json(const CheckReport& r) {
  json j{{"id", r.id},       {"n", r.n},     {"seed", r.seed},
         {"margin", r.margin}, {"scale", r.scale}, {"tol", r.tol},
         {"status", to_string(r.status)},    {"method", r.method},
         {"ms", r.ms}};
  if (r.p) j["p"] = *r.p;
  if (r.k) j["k"] = *r.k;
  if (r.j) j["j"] = *r.j;
  if (r.r) j["r"] = *r.r;
  if (r.lambda) j["lambda"] = *r.lambda;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline CheckReport report_from_json(const json& j) {
  CheckReport r;
  r.id = j.at("id").get<std::string>();
  r.n = j.at("n").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.margin = j.at("margin").get<double>();
  r.scale = j.at("scale").get<double>();
  r.tol = j.at("tol").get<double>();
  r.status = status_from_string(j.at("status").get<std::string>());
  r.method = j.at("method").get<std::string>();
  r.ms = j.at("ms").get<double>();
  if (j.contains("p")) r.p = j.at("p").get<double>();
  if (j.contains("k")) r.k = j.at("k").get<int>();
  if (j.contains("j")) r.j = j.at("j").get<int>();
  if (j.contains("r")) r.r = j.at("r").get<int>();
  if (j.contains("lambda")) r.lambda = j.at("lambda").get<double>();
  if (j.contains("note")) r.note = j.at("note").get<std::string>();
  return r;
}

inline constexpr const char* kReportCsvHeader =
    "id,n,p,k,j,r,lambda,seed,margin,scale,tol,status,method,ms,note";

namespace detail {

inline std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string csv_sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

}  // namespace detail

inline std::string report_csv_row(const CheckReport& r) {
  std::ostringstream os;
  os << r.id << ',' << r.n << ',';
  if (r.p) os << detail::csv_num(*r.p);
  os << ',';
  if (r.k) os << *r.k;
  os << ',';
  if (r.j) os << *r.j;
  os << ',';
  if (r.r) os << *r.r;
  os << ',';
  if (r.lambda) os << detail::csv_num(*r.lambda);
  os << ',' << r.seed << ',' << detail::csv_num(r.margin) << ',' << detail::csv_num(r.scale)
     << ',' << detail::csv_num(r.tol) << ',' << to_string(r.status) << ','
     << detail::csv_sanitize(r.method) << ',' << detail::csv_num(r.ms) << ','
     << detail::csv_sanitize(r.note);
  return os.str();
}

inline json reports_to_json(const std::vector<CheckReport>& reports) {
  json arr = json::array();
  for (const CheckReport& r : reports) arr.push_back(report_to_json(r));
  return json{{"reports", std::move(arr)}};
}

inline std::vector<CheckReport> reports_from_json(const json& j) {
  std::vector<CheckReport> out;
  for (const json& item : j.at("reports")) out.push_back(report_from_json(item));
  return out;
}

inline void emit_reports_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  os << kReportCsvHeader << "\n";
  for (const CheckReport& r : reports) os << report_csv_row(r) << "\n";
}

// --- derivative table serialization (lambda, r, method, value, err,
//     expected_sign, margin, pass) --------------------------------------------

inline json derivative_table_to_json(const DerivativeTable& t) {
  json rows = json::array();
  for (const DerivRow& row : t.rows)
    rows.push_back(json{{"lambda", row.lambda},
                        {"r", row.r},
                        {"method", row.method},
                        {"value", row.value},
                        {"err", row.err},
                        {"expected_sign", theorem2_sign(t.p, row.r)},
                        {"margin", row.margin},
                        {"pass", row.pass}});
  return json{{"p", t.p}, {"rows", std::move(rows)}};
}

inline void derivative_table_to_csv(std::ostream& os, const DerivativeTable& t) {
  os << "lambda,r,method,value,err,expected_sign,margin,pass\n";
  for (const DerivRow& row : t.rows)
    os << detail::csv_num(row.lambda) << ',' << row.r << ',' << row.method << ','
       << detail::csv_num(row.value) << ',' << detail::csv_num(row.err) << ','
       << detail::csv_num(theorem2_sign(t.p, row.r)) << ',' << detail::csv_num(row.margin)
       << ',' << (row.pass ? "true" : "false") << "\n";
}

// --- run manifest -------------------------------------------------------------

struct CheckTotals {
  long pass = 0, fail = 0, finding = 0;
};

struct RunManifest {
  json config_echo;
  std::map<std::string, CheckTotals> totals;
  std::map<std::string, double> worst_margin;
  std::vector<std::string> certificates;
  double wall_ms = 0;
  int exit_code = exit_code::ok;
};

inline json manifest_to_json(const RunManifest& m) {
  json totals = json::object();
  for (const auto& [id, t] : m.totals)
    totals[id] = json{{"pass", t.pass}, {"fail", t.fail}, {"finding", t.finding}};
  json worst = json::object();
  for (const auto& [id, w] : m.worst_margin) worst[id] = w;
  return json{{"config", m.config_echo}, {"totals", std::move(totals)},
              {"worst_margin", std::move(worst)}, {"certificates", m.certificates},
              {"wall_ms", m.wall_ms},   {"exit_code", m.exit_code}};
}

inline void accumulate(RunManifest& m, const CheckReport& r) {
  CheckTotals& t = m.totals[r.id];
  switch (r.status) {
    case Status::pass: ++t.pass; break;
    case Status::fail: ++t.fail; break;
    case Status::finding: ++t.finding; break;
  }
  auto it = m.worst_margin.find(r.id);
  if (it == m.worst_margin.end() || r.margin < it->second) m.worst_margin[r.id] = r.margin;
}

}  // namespace bmv
