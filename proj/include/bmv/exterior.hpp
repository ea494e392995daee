#pragma once

#include <vector>

#include "bmv/common.hpp"
#include "bmv/mat_ops.hpp"
#include "bmv/matcore.hpp"

namespace bmv {

/// All j-element subsets of {0..n-1}, each sorted, in lexicographic order.
/// This ordering is the shared wedge-space basis convention: every lift and
/// compound below indexes rows/columns by it.
inline std::vector<std::vector<int>> index_subsets(int n, int j) {
  if (j < 1 || j > n) throw DomainError("index_subsets: need 1 <= j <= n");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(j);
  for (int i = 0; i < j; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int i = j - 1;
    while (i >= 0 && cur[i] == n - j + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int t = i + 1; t < j; ++t) cur[t] = cur[t - 1] + 1;
  }
  return out;
}

inline double wedge_dimension(int n, int j) {
  return static_cast<double>(binomial_u64(n, j));
}

/// j-th compound: entry (S,T) is the j x j minor with rows S, columns T.
/// Multiplicative over products (Cauchy-Binet); trace equals e_j.
inline MatC compound(const MatC& m, int j) {
  const int n = static_cast<int>(m.rows());
  if (m.rows() != m.cols()) throw DomainError("compound: square input required");
  if (j < 1 || j > n) throw DomainError("compound: order out of range");
  if (j == 1) return m;
  const auto subs = index_subsets(n, j);
  const int d = static_cast<int>(subs.size());
  MatC out(d, d);
  MatC sub(j, j);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      for (int r = 0; r < j; ++r)
        for (int c = 0; c < j; ++c) sub(r, c) = m(subs[a][r], subs[b][c]);
      out(a, b) = sub.determinant();
    }
  return out;
}

/// Alias used when building the wedge product lift B ^ B ^ ... ^ B.
inline MatC wedge_product_lift(const MatC& m, int j) { return compound(m, j); }

/// e_j from a list of eigenvalues via the stable polynomial-coefficient
/// recurrence (no subset enumeration).
template <class T>
T elem_sym_from_values(const std::vector<T>& vals, int j) {
  const int n = static_cast<int>(vals.size());
  if (j < 1 || j > n) throw DomainError("elem_sym_from_values: order out of range");
  std::vector<T> e(static_cast<size_t>(j) + 1, T(0));
  e[0] = T(1);
  for (int m = 0; m < n; ++m)
    for (int q = std::min(j, m + 1); q >= 1; --q) e[q] += vals[m] * e[q - 1];
  return e[j];
}

inline double elem_sym_from_eigs(const std::vector<double>& eigs, int j) {
  return elem_sym_from_values<double>(eigs, j);
}

/// e_1..e_jmax of a general square matrix from power-sum traces via Newton's
/// identities. Works for non-normal inputs (word products) where eigenvalues
/// are numerically fragile; exact on the rational lane.
template <class M>
std::vector<typename mat_ops<M>::scalar> elem_sym_of_matrix_upto(const M& m, int jmax) {
  using S = typename mat_ops<M>::scalar;
  const int n = mat_ops<M>::dim(m);
  if (jmax < 1 || jmax > n) throw DomainError("elem_sym_of_matrix_upto: order out of range");
  std::vector<S> p(static_cast<size_t>(jmax) + 1, S(0));  // power sums
  M pw = m;
  p[1] = mat_ops<M>::trace(pw);
  for (int i = 2; i <= jmax; ++i) {
    pw = mat_ops<M>::mul(pw, m);
    p[i] = mat_ops<M>::trace(pw);
  }
  std::vector<S> e(static_cast<size_t>(jmax) + 1, S(0));
  e[0] = S(1);
  for (int k = 1; k <= jmax; ++k) {
    S acc(0);
    for (int i = 1; i <= k; ++i) {
      S term = e[k - i] * p[i];
      if (i % 2 == 0) term = S(0) - term;
      acc += term;
    }
    e[k] = acc / S(k);
  }
  e.erase(e.begin());
  return e;
}

template <class M>
typename mat_ops<M>::scalar elem_sym_of_matrix(const M& m, int j) {
  return elem_sym_of_matrix_upto(m, j).back();
}

/// Derivation-style lift (A x 1 x ... x 1) + ... + (1 x ... x 1 x A) on the
/// j-fold wedge space; satisfies exp(lift(A)) = compound(exp(A)).
inline MatC wedge_sum_lift(const MatC& a, int j) {
  const int n = static_cast<int>(a.rows());
  if (a.rows() != a.cols()) throw DomainError("wedge_sum_lift: square input required");
  if (j < 1 || j > n) throw DomainError("wedge_sum_lift: order out of range");
  if (j == 1) return a;
  const auto subs = index_subsets(n, j);
  const int d = static_cast<int>(subs.size());
  MatC out = MatC::Zero(d, d);
  for (int col = 0; col < d; ++col) {
    const auto& T = subs[col];
    cxd diag(0, 0);
    for (int t : T) diag += a(t, t);
    out(col, col) = diag;
    // replace one index t in T by s not in T; sign from resorting the wedge
    for (int tpos = 0; tpos < j; ++tpos) {
      for (int s = 0; s < n; ++s) {
        bool in_T = false;
        for (int t : T)
          if (t == s) in_T = true;
        if (in_T) continue;
        std::vector<int> S = T;
        S[tpos] = s;
        int spos = tpos;
        int sign = 1;
        while (spos + 1 < j && S[spos] > S[spos + 1]) {
          std::swap(S[spos], S[spos + 1]);
          ++spos;
          sign = -sign;
        }
        while (spos > 0 && S[spos] < S[spos - 1]) {
          std::swap(S[spos], S[spos - 1]);
          --spos;
          sign = -sign;
        }
        int row = -1;
        for (int q = 0; q < d; ++q)
          if (subs[q] == S) {
            row = q;
            break;
          }
        out(row, col) += static_cast<double>(sign) * a(s, T[tpos]);
      }
    }
  }
  return out;
}

inline HermitianMatrix wedge_sum_lift(const HermitianMatrix& a, int j) {
  return HermitianMatrix(wedge_sum_lift(a.mat(), j));
}

}  // namespace bmv
