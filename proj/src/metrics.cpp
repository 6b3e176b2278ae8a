#include "raqmsim/metrics.hpp"

#include <cmath>

namespace raqmsim {

MetricsReport compute_metrics(const Trace& trace, double threshold, double nbar,
                              double eta_end_to_end) {
  MetricsReport r;
  r.seed = trace.seed;
  r.config_hash = trace.config_hash;
  r.threshold = threshold;
  r.nbar = nbar;
  r.eta_end_to_end = eta_end_to_end;
  r.expected_click_fraction = 1.0 - std::exp(-nbar * eta_end_to_end);

  r.n_instructions = static_cast<int>(trace.events.size());
  r.filling_series.reserve(trace.events.size());

  int filling = 0;
  double storage_sum = 0.0;
  std::map<std::string, std::vector<double>> fid_values;

  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& ev = trace.events[i];
    ++r.access_counts[ev.instr.cell - 1];

    if (ev.instr.op == OpType::Write) {
      ++r.n_writes;
      ++filling;
      if (ev.outcome == Outcome::Stored) {
        ++r.n_stored;
      } else {
        ++r.n_lost_writes;
      }
    } else {
      ++r.n_reads;
      --filling;
      if (ev.instr.forced) ++r.n_forced;
      if (ev.outcome == Outcome::Retrieved || ev.outcome == Outcome::ForcedRetrieved) {
        ++r.n_retrieved;
        if (ev.storage_us) {
          storage_sum += *ev.storage_us;
          ++r.storage_hist_us[static_cast<int>(std::llround(*ev.storage_us))];
        }
        if (ev.fidelity) {
          if (ev.input_pol) {
            fid_values[std::string(1, pol_char(*ev.input_pol))].push_back(*ev.fidelity);
          }
          if (*ev.fidelity < threshold) {
            r.below_threshold.push_back({i, ev.instr.cell, *ev.fidelity});
          }
        }
      } else {
        ++r.n_lost_reads;
      }
    }
    r.max_filling = std::max(r.max_filling, filling);
    r.filling_series.push_back(filling);
  }
  r.final_filling = filling;

  for (int count : r.access_counts) {
    if (count > 0) ++r.visited_cells;
    r.max_accesses = std::max(r.max_accesses, count);
  }
  r.mean_accesses_all =
      static_cast<double>(r.n_instructions) / static_cast<double>(ArrayGeometry::kCellCount);
  r.mean_accesses_visited =
      r.visited_cells > 0
          ? static_cast<double>(r.n_instructions) / static_cast<double>(r.visited_cells)
          : 0.0;

  r.mean_storage_us = r.n_retrieved > 0 ? storage_sum / r.n_retrieved : 0.0;
  r.forced_fraction =
      r.n_instructions > 0 ? static_cast<double>(r.n_forced) / r.n_instructions : 0.0;

  for (const auto& [pol, values] : fid_values) {
    PolFidelityStats stats;
    stats.count = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean = sum / stats.count;
    double var = 0.0;
    for (double v : values) var += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(var / stats.count);
    r.fidelity_by_pol[pol] = stats;
  }
  return r;
}

}  // namespace raqmsim
