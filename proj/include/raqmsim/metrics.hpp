#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "raqmsim/controller.hpp"

namespace raqmsim {

struct PolFidelityStats {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population

  bool operator==(const PolFidelityStats&) const = default;
};

struct LowFidelityEvent {
  std::size_t event_index = 0;
  int cell = 0;
  double fidelity = 0.0;

  bool operator==(const LowFidelityEvent&) const = default;
};

// Everything reported about a run. Every field is a one-pass recount over the
// trace, so an independent reader of the trace file can reproduce it exactly.
struct MetricsReport {
  std::uint64_t seed = 0;
  std::string config_hash;

  int n_instructions = 0;
  int n_writes = 0;
  int n_reads = 0;
  int n_forced = 0;
  int n_stored = 0;
  int n_lost_writes = 0;
  int n_retrieved = 0;  // includes forced retrievals
  int n_lost_reads = 0;

  int final_filling = 0;
  int max_filling = 0;
  std::vector<int> filling_series;  // logical occupancy after each instruction

  std::array<int, ArrayGeometry::kCellCount> access_counts{};
  double mean_accesses_all = 0.0;      // over all 72 cells
  double mean_accesses_visited = 0.0;  // over cells with at least one access
  int visited_cells = 0;
  int max_accesses = 0;

  std::map<int, int> storage_hist_us;  // retrieved reads, key = rounded us
  double mean_storage_us = 0.0;

  std::map<std::string, PolFidelityStats> fidelity_by_pol;

  double forced_fraction = 0.0;  // forced reads / instructions

  double threshold = 2.0 / 3.0;
  std::vector<LowFidelityEvent> below_threshold;

  // Weak-coherent-input rate bookkeeping: chance that a retrieval produces a
  // detector click given mean photon number nbar and the end-to-end budget.
  double nbar = 0.5;
  double eta_end_to_end = 0.0;
  double expected_click_fraction = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const Trace& trace, double threshold, double nbar,
                              double eta_end_to_end);

}  // namespace raqmsim
