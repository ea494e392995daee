#pragma once

#include <fstream>
#include <json.hpp>

#include "bmv/common.hpp"
#include "bmv/matcore.hpp"
#include "bmv/rat_matrix.hpp"

namespace bmv {

using nlohmann::json;

// Float format:    {"n": int, "re": [[..]], "im": [[..]]} ("im" optional, defaults zero)
// Rational format: {"n": int, "num": [[int]], "den": [[int]]}

inline json matrix_to_json(const MatC& m) {
  const int n = static_cast<int>(m.rows());
  json re = json::array(), im = json::array();
  bool any_imag = false;
  for (int i = 0; i < n; ++i) {
    json rrow = json::array(), irow = json::array();
    for (int j = 0; j < n; ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
      any_imag = any_imag || m(i, j).imag() != 0.0;
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  json out{{"n", n}, {"re", std::move(re)}};
  if (any_imag) out["im"] = std::move(im);
  return out;
}

inline json matrix_to_json(const RatMat& m) {
  json num = json::array(), den = json::array();
  for (int i = 0; i < m.n(); ++i) {
    json nrow = json::array(), drow = json::array();
    for (int j = 0; j < m.n(); ++j) {
      const Rational& q = m.at(i, j);
      if (!fits_long(q.get_num()) || !fits_long(q.get_den()))
        throw DomainError("matrix_to_json: rational entry exceeds 64-bit range");
      nrow.push_back(q.get_num().get_si());
      drow.push_back(q.get_den().get_si());
    }
    num.push_back(std::move(nrow));
    den.push_back(std::move(drow));
  }
  return json{{"n", m.n()}, {"num", std::move(num)}, {"den", std::move(den)}};
}

inline bool json_is_rational_matrix(const json& j) { return j.contains("num"); }

inline MatC matrix_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("re"))
    throw UsageError("matrix_from_json: need fields n, re");
  const int n = j.at("n").get<int>();
  if (n < 1) throw UsageError("matrix_from_json: n must be >= 1");
  MatC m(n, n);
  const json& re = j.at("re");
  const json* im = j.contains("im") ? &j.at("im") : nullptr;
  if (static_cast<int>(re.size()) != n) throw UsageError("matrix_from_json: re shape mismatch");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(re[i].size()) != n)
      throw UsageError("matrix_from_json: re shape mismatch");
    for (int k = 0; k < n; ++k) {
      const double x = re[i][k].get<double>();
      const double y = im ? (*im)[i][k].get<double>() : 0.0;
      m(i, k) = cxd(x, y);
    }
  }
  return m;
}

inline RatMat rational_matrix_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("num") || !j.contains("den"))
    throw UsageError("rational_matrix_from_json: need fields n, num, den");
  const int n = j.at("n").get<int>();
  RatMat m(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const long num = j.at("num")[i][k].get<long>();
      const long den = j.at("den")[i][k].get<long>();
      if (den == 0) throw UsageError("rational_matrix_from_json: zero denominator");
      m.at(i, k) = rat(num, den);
    }
  return m;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open for reading: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace bmv
