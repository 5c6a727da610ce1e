#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mpstomo/core.hpp"
#include "mpstomo/eigensolver.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/pauli.hpp"
#include "mpstomo/tomo.hpp"

namespace mpstomo {

enum class SvtInit { zero, R };

inline const char* to_string(SvtInit i) { return i == SvtInit::zero ? "zero" : "R"; }

/// Constant step, or an explicit sequence (its last entry repeats).
struct StepSchedule {
  double constant = 0.02;
  std::vector<double> sequence;

  double at(int n) const {
    if (sequence.empty()) return constant;
    return sequence[static_cast<std::size_t>(std::min<int>(n, static_cast<int>(sequence.size()) - 1))];
  }
  void validate() const {
    if (sequence.empty() && !(constant > 0.0)) throw dimension_error("step size must be > 0");
    for (double v : sequence)
      if (!(v > 0.0)) throw dimension_error("step sizes must be > 0");
  }
};

inline SweepConfig default_svt_sweeps(int bond_dim) {
  SweepConfig s;
  s.bond_dim = bond_dim;
  s.max_sweeps = 2;
  s.tol = 1e-9;
  s.extremum = Extremum::max;
  return s;
}

struct SVTConfig {
  int bond_dim = 8;
  int n_iters = 1000;
  StepSchedule delta;
  SvtInit init = SvtInit::zero;
  SweepConfig eigensolver = default_svt_sweeps(8);
  int record_stride = 1;

  void validate() const {
    if (n_iters < 1) throw dimension_error("SVTConfig: n_iters must be >= 1");
    if (bond_dim < 1) throw dimension_error("SVTConfig: bond_dim must be >= 1");
    if (record_stride < 1) throw dimension_error("SVTConfig: record_stride must be >= 1");
    delta.validate();
  }
};

struct TraceEntry {
  int iteration = 0;
  double eigenvalue = 0.0;
  double merit = 0.0;
  std::optional<double> fidelity;
  bool converged = true;
};

struct ReconstructionResult {
  MPS best_state;
  int best_iteration = -1;
  double best_merit = std::numeric_limits<double>::infinity();
  std::optional<double> best_fidelity;
  std::vector<TraceEntry> trace;
  WindowOperatorSum final_Y;
  int unconverged_solves = 0;
};

/// R with coefficients p_{m,i} exactly as stored in the dataset.
inline WindowOperatorSum build_R(const TomographyDataset& ds) {
  ds.validate();
  WindowOperatorSum r(ds.n_sites, ds.window_size);
  for (int i = 0; i < ds.n_windows(); ++i) r.window(i) = ds.coeffs[static_cast<std::size_t>(i)];
  return r;
}

/// x = sum over windows and non-identity labels of |p_{m,i} - <y|P_m^i|y>|.
inline double figure_of_merit(const WindowTable& table, const TomographyDataset& ds) {
  if (static_cast<int>(table.size()) != ds.n_windows()) throw dimension_error("figure_of_merit: window count mismatch");
  double x = 0.0;
  for (int i = 0; i < ds.n_windows(); ++i) {
    const RealVector& p = ds.coeffs[static_cast<std::size_t>(i)];
    const RealVector& e = table[static_cast<std::size_t>(i)];
    if (p.size() != e.size()) throw dimension_error("figure_of_merit: label count mismatch");
    x += (p.tail(p.size() - 1) - e.tail(e.size() - 1)).cwiseAbs().sum();
  }
  return x;
}

inline double figure_of_merit(const MPS& y, const TomographyDataset& ds) {
  if (static_cast<int>(y.size()) != ds.n_sites) throw dimension_error("figure_of_merit: chain length mismatch");
  return figure_of_merit(window_expectations(y, ds.window_size), ds);
}

struct StepResult {
  WindowOperatorSum next;
  MPS state;
  double value = 0.0;
  WindowTable expectations;
  bool converged = true;
};

/// One iteration: |y> = top eigenstate of Y, X = y_val <y|P|y>, Y' = Y + delta (R - X).
inline StepResult svt_step(const WindowOperatorSum& Y, const WindowOperatorSum& R, double delta,
                           const std::optional<MPS>& warm, const SweepConfig& sweeps) {
  if (!Y.same_shape(R)) throw dimension_error("svt_step: Y and R shapes differ");
  SweepConfig cfg = sweeps;
  cfg.extremum = Extremum::max;
  auto eig = extremal_eigenstate(Y, cfg, warm);
  StepResult out;
  out.expectations = expectations(eig.state, Y);
  out.value = operator_value(Y, out.expectations);
  out.converged = eig.converged;
  out.next = Y;
  out.next.axpy(delta, R);
  for (int i = 0; i < Y.n_windows(); ++i)
    out.next.window(i) -= (delta * out.value) * out.expectations[static_cast<std::size_t>(i)];
  out.state = std::move(eig.state);
  return out;
}

using ProgressFn = std::function<void(const TraceEntry&)>;

/// Runs cfg.n_iters eigensolves of the iteration Y_{n+1} = Y_n + delta_n (R - X_n),
/// warm-starting each solve from the previous iterate, and keeps the iterate
/// with the smallest figure of merit. With init = zero the first update is
/// taken analytically (X_0 = 0), so iterate 1 is the top eigenstate of delta_0 R.
inline ReconstructionResult run(const TomographyDataset& ds, const SVTConfig& cfg,
                                const std::optional<MPS>& reference = std::nullopt, const ProgressFn& progress = {}) {
  cfg.validate();
  const WindowOperatorSum R = build_R(ds);
  SweepConfig sweeps = cfg.eigensolver;
  sweeps.bond_dim = cfg.bond_dim;

  ReconstructionResult res;
  WindowOperatorSum Y = R;
  int n = 0;
  if (cfg.init == SvtInit::zero) {
    Y *= cfg.delta.at(0);
    n = 1;
  }
  std::optional<MPS> warm;
  const int last = n + cfg.n_iters - 1;
  for (; n <= last; ++n) {
    auto step = svt_step(Y, R, cfg.delta.at(n), warm, sweeps);
    TraceEntry entry;
    entry.iteration = n;
    entry.eigenvalue = step.value;
    entry.merit = figure_of_merit(step.expectations, ds);
    entry.converged = step.converged;
    if (reference) entry.fidelity = fidelity(*reference, step.state);
    if (!step.converged) ++res.unconverged_solves;
    if (entry.merit < res.best_merit) {
      res.best_merit = entry.merit;
      res.best_iteration = n;
      res.best_state = step.state;
      res.best_fidelity = entry.fidelity;
    }
    if ((n % cfg.record_stride) == 0 || n == last) {
      res.trace.push_back(entry);
      if (progress) progress(entry);
    }
    Y = std::move(step.next);
    warm = std::move(step.state);
  }
  res.final_Y = std::move(Y);
  return res;
}

}  // namespace mpstomo
