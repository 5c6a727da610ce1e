#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mpstomo/core.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/pauli.hpp"

namespace mpstomo {

/// Sparse MPO site: a list of (left state, right state, d x d operator).
struct MpoSite {
  struct Entry {
    int left;
    int right;
    Matrix op;
  };
  int left_dim = 0;
  int right_dim = 0;
  std::vector<Entry> entries;
};

/// Finite-state-automaton MPO. On every bond, state 0 means "no operator
/// placed yet" and state 1 means "term complete"; the remaining states carry
/// a partially applied Pauli word. Boundaries select state 0 on the left and
/// state 1 on the right.
struct Mpo {
  std::vector<MpoSite> sites;
  std::size_t size() const { return sites.size(); }
};

namespace detail {

struct Term {
  int start;
  std::string letters;
  double coeff;
};

inline void add_entry(std::map<std::pair<int, int>, Matrix>& acc, int l, int r, const Matrix& op) {
  auto [it, inserted] = acc.try_emplace({l, r}, op);
  if (!inserted) it->second += op;
}

}  // namespace detail

inline Mpo build_mpo(const WindowOperatorSum& opsum) {
  const int n = opsum.n_sites();
  const int k = opsum.window_size();

  double constant = 0.0;
  std::vector<detail::Term> terms;
  for (int i = 0; i < opsum.n_windows(); ++i) {
    const RealVector& c = opsum.window(i);
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      if (c(m) == 0.0) continue;
      const std::string w = word_from_index(static_cast<std::size_t>(m), k);
      const auto first = w.find_first_not_of('I');
      if (first == std::string::npos) {
        constant += c(m);
        continue;
      }
      const auto last = w.find_last_not_of('I');
      terms.push_back({i + static_cast<int>(first), w.substr(first, last - first + 1), c(m)});
    }
  }

  // Prefix states on bond b (after site b), keyed by (term start, prefix).
  std::vector<std::map<std::pair<int, std::string>, int>> states(static_cast<std::size_t>(n));
  for (const auto& t : terms) {
    for (std::size_t j = 0; j + 1 < t.letters.size(); ++j) {
      auto& bond = states[static_cast<std::size_t>(t.start) + j];
      bond.try_emplace({t.start, t.letters.substr(0, j + 1)}, 0);
    }
  }
  for (auto& bond : states) {
    int next = 2;
    for (auto& [key, idx] : bond) idx = next++;
  }

  const Matrix id = Matrix::Identity(2, 2);
  Mpo mpo;
  mpo.sites.resize(static_cast<std::size_t>(n));
  for (int site = 0; site < n; ++site) {
    std::map<std::pair<int, int>, Matrix> acc;
    detail::add_entry(acc, 0, 0, id);
    detail::add_entry(acc, 1, 1, id);
    if (site == 0 && constant != 0.0) detail::add_entry(acc, 0, 1, constant * id);
    const auto* left_states = site > 0 ? &states[static_cast<std::size_t>(site - 1)] : nullptr;
    const auto& right_states = states[static_cast<std::size_t>(site)];

    for (const auto& t : terms) {
      const int offset = site - t.start;
      if (offset < 0 || offset >= static_cast<int>(t.letters.size())) continue;
      const Matrix op = pauli_matrix(t.letters[static_cast<std::size_t>(offset)]);
      const bool ends_here = offset + 1 == static_cast<int>(t.letters.size());
      const int from = offset == 0 ? 0 : left_states->at({t.start, t.letters.substr(0, static_cast<std::size_t>(offset))});
      if (ends_here) {
        detail::add_entry(acc, from, 1, t.coeff * op);
      } else {
        const int to = right_states.at({t.start, t.letters.substr(0, static_cast<std::size_t>(offset + 1))});
        // Continuation entries are shared between terms with a common prefix.
        acc.try_emplace({from, to}, op);
      }
    }

    auto& ms = mpo.sites[static_cast<std::size_t>(site)];
    ms.left_dim = 2 + (site > 0 ? static_cast<int>(states[static_cast<std::size_t>(site - 1)].size()) : 0);
    ms.right_dim = 2 + static_cast<int>(right_states.size());
    for (auto& [key, op] : acc) ms.entries.push_back({key.first, key.second, std::move(op)});
  }
  return mpo;
}

/// Left MPO environment: one D x D matrix per MPO bond state (bra rows, ket columns).
using MpoEnv = std::vector<Matrix>;

inline MpoEnv left_boundary(int dim) {
  MpoEnv env(static_cast<std::size_t>(dim), Matrix::Zero(1, 1));
  env[0](0, 0) = 1.0;
  return env;
}

inline MpoEnv right_boundary(int dim) {
  MpoEnv env(static_cast<std::size_t>(dim), Matrix::Zero(1, 1));
  env[1](0, 0) = 1.0;
  return env;
}

inline MpoEnv extend_left(const MpoEnv& left, const SiteTensor& a, const MpoSite& w) {
  const auto dr = a.front().cols();
  MpoEnv out(static_cast<std::size_t>(w.right_dim), Matrix::Zero(dr, dr));
  const int d = static_cast<int>(a.size());
  for (const auto& e : w.entries) {
    const Matrix& l = left[static_cast<std::size_t>(e.left)];
    if (l.isZero(0.0)) continue;
    for (int s = 0; s < d; ++s) {
      const Matrix ls = l * a[static_cast<std::size_t>(s)];
      for (int t = 0; t < d; ++t) {
        const cplx o = e.op(t, s);
        if (o == cplx(0.0)) continue;
        out[static_cast<std::size_t>(e.right)].noalias() += o * (a[static_cast<std::size_t>(t)].adjoint() * ls);
      }
    }
  }
  return out;
}

inline MpoEnv extend_right(const MpoEnv& right, const SiteTensor& a, const MpoSite& w) {
  const auto dl = a.front().rows();
  MpoEnv out(static_cast<std::size_t>(w.left_dim), Matrix::Zero(dl, dl));
  const int d = static_cast<int>(a.size());
  for (const auto& e : w.entries) {
    const Matrix& r = right[static_cast<std::size_t>(e.right)];
    if (r.isZero(0.0)) continue;
    for (int s = 0; s < d; ++s) {
      const Matrix as = a[static_cast<std::size_t>(s)] * r;
      for (int t = 0; t < d; ++t) {
        const cplx o = e.op(t, s);
        if (o == cplx(0.0)) continue;
        out[static_cast<std::size_t>(e.left)].noalias() += o * (as * a[static_cast<std::size_t>(t)].adjoint());
      }
    }
  }
  return out;
}

/// <psi|O|psi> / <psi|psi> by full contraction.
inline double mpo_expectation(const MPS& mps, const Mpo& mpo) {
  if (mps.size() != mpo.size()) throw dimension_error("mpo_expectation: length mismatch");
  MpoEnv env = left_boundary(mpo.sites.front().left_dim);
  for (std::size_t i = 0; i < mps.size(); ++i) env = extend_left(env, mps.site(i), mpo.sites[i]);
  return env[1](0, 0).real() / overlap(mps, mps).real();
}

}  // namespace mpstomo
