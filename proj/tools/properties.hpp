#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

// Property checks shared by `colorsal selftest` and the acceptance binary.
// Every check builds its own synthetic scorer and image, so none of them
// needs a model server.
namespace colorsal::props {

struct Result {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Params {
  std::size_t num_masks = 100000;  // Monte-Carlo size for oracle comparisons
  std::uint64_t seed = 20240917;
  int workers = 1;
  // Negative control: perturbs the Monte-Carlo accumulators before they are
  // compared with the oracle, which must make the oracle checks fail.
  bool tamper = false;
};

// MC estimate within 4 empirical standard errors of the exact value at every
// cell (2x2 grid, p = 0.5, interpolation and shift off).
Result oracle_rise(const Params& params);
Result oracle_debiased(const Params& params);
Result oracle_mcrise(const Params& params);  // K = 2, 81 states

// Weighted-sum and conditional-expectation forms of the exact estimators
// agree to 1e-12.
Result oracle_dual_forms();

// Exact debiased map is 0 (1e-12) on cells the scorer ignores and above 0.01
// somewhere else.
Result ignored_cells_vanish();

// exact_mcrise and exact_debiased vanish (1e-12) for a constant scorer.
Result constant_nullity();

// m0 + sum_k m_k = 1 within 1e-9 for `samples` interpolated, shifted masks.
Result partition_of_unity(std::size_t samples, std::uint64_t seed);

// Estimates for a*M1 + b*M2 equal a*S1 + b*S2 within 1e-9 for all three
// estimators.
Result linearity(std::size_t num_masks, std::uint64_t seed, int workers);

// Debiased background mean |S| <= 1e-2 max|S|; RISE background mean
// >= 0.25 max S.
Result debias_background(std::size_t num_masks, std::uint64_t seed, int workers);

// AUC(ca-deletion, mcrise) < AUC(deletion, rise) - 0.05 < AUC(random) - 0.05
// for one seed.
Result ca_deletion_direction(std::size_t num_masks, std::uint64_t seed, int workers);

// `colorsal explain` twice with one worker gives byte-identical artifacts;
// with eight workers values agree within 1e-6.
Result explain_determinism(const std::string& method, std::size_t num_masks, std::uint64_t seed);

// Runs `fn`, timing it and turning exceptions into failures.
Result timed(const std::string& name, const std::function<Result()>& fn);

}  // namespace colorsal::props
