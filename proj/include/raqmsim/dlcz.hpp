#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "raqmsim/controller.hpp"
#include "raqmsim/encoding.hpp"
#include "raqmsim/memarray.hpp"
#include "raqmsim/qstate.hpp"
#include "raqmsim/rng.hpp"

namespace raqmsim {

struct SourceParams {
  double p_exc = 0.011;            // herald probability per write-clean trial
  double cycle_us = 0.7;           // write-clean cycle
  double f_source = 0.94;          // signal-idler pair fidelity to |Psi+>
  double catch_dead_time_us = 2.0; // feed-forward + storage per catch
  std::uint64_t max_trials = 1'000'000;

  void validate() const;  // throws std::invalid_argument
};

struct HeraldSample {
  std::uint64_t trials = 0;
  double herald_time_us = 0.0;  // trials * cycle
};

// Geometric herald law: P(k trials) = (1-p)^(k-1) p.
HeraldSample sample_herald(const SourceParams& params, Rng& rng);

// Probability that k heralds, each followed by catch_dead_time, complete
// within T. A fixed dead time per catch reduces exactly to a binomial tail
// over the remaining trial budget, so this path is closed-form.
double prob_k_pairs_within(double t_us, int k, const SourceParams& params);

// Monte Carlo estimate of the same quantity, for cross-checks.
double prob_k_pairs_within_mc(double t_us, int k, const SourceParams& params,
                              std::uint64_t samples, Rng& rng);

struct EPRRecord {
  int pair_id = 0;               // arrival order, 1..4
  double herald_time_us = 0.0;
  int cell = 0;
  std::int64_t release_slot = 0;
  double store_time_us = 0.0;    // when the idler entered the memory
  double storage_us = 0.0;       // release - store
  DensityMatrix rho_final = DensityMatrix::bell_psi_plus();
  double fidelity = 0.0;         // overlap with |Psi+>
};

// Catch-freeze-reshuffle-release: runs source trials until four heralds, each
// idler is pushed through the cell's input chain into the next free cell,
// then all four are read back in `order` on consecutive clock slots through
// the output chain. rho_final carries every channel the idler saw; the signal
// factor is never touched by the memory.
std::vector<EPRRecord> catch_freeze_reshuffle_release(const std::array<int, 4>& order,
                                                      const SourceParams& params,
                                                      MemoryArray& array,
                                                      const CalibrationTable& calibration,
                                                      Rng& rng);

// Coincidence-count estimator: sampled counts in the xx, yy, zz bases ->
// diagonal Pauli coefficients -> Bell fidelity.
BellFidelityEstimate pair_fidelity_via_tomography(const DensityMatrix& rho4,
                                                  std::uint64_t shots_per_basis, Rng& rng);

}  // namespace raqmsim
