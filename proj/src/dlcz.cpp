#include "raqmsim/dlcz.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace raqmsim {

void SourceParams::validate() const {
  if (!(p_exc > 0.0) || p_exc >= 1.0) {
    throw std::invalid_argument("SourceParams: p_exc must be in (0, 1)");
  }
  if (!(cycle_us > 0.0)) {
    throw std::invalid_argument("SourceParams: cycle must be positive");
  }
  if (!(f_source > 0.25) || f_source > 1.0) {
    throw std::invalid_argument("SourceParams: f_source must be in (0.25, 1]");
  }
  if (catch_dead_time_us < 0.0) {
    throw std::invalid_argument("SourceParams: dead time must be >= 0");
  }
  if (max_trials == 0) {
    throw std::invalid_argument("SourceParams: max_trials must be positive");
  }
}

HeraldSample sample_herald(const SourceParams& params, Rng& rng) {
  params.validate();
  HeraldSample h;
  h.trials = rng.geometric_trials(params.p_exc);
  h.herald_time_us = static_cast<double>(h.trials) * params.cycle_us;
  return h;
}

namespace {

// P(X >= k), X ~ Binomial(n, p), by subtracting the lower tail. k is tiny
// here so the direct log-space sum is exact enough and stable.
double binomial_tail_ge(std::int64_t n, double p, int k) {
  if (n < k) return 0.0;
  const double logp = std::log(p);
  const double logq = std::log1p(-p);
  double below = 0.0;
  for (int j = 0; j < k; ++j) {
    const double logterm = std::lgamma(static_cast<double>(n) + 1.0) -
                           std::lgamma(static_cast<double>(j) + 1.0) -
                           std::lgamma(static_cast<double>(n - j) + 1.0) + j * logp +
                           (n - j) * logq;
    below += std::exp(logterm);
  }
  return 1.0 - below;
}

}  // namespace

double prob_k_pairs_within(double t_us, int k, const SourceParams& params) {
  params.validate();
  if (!(t_us > 0.0) || k < 1) {
    throw std::invalid_argument("prob_k_pairs_within: need T > 0 and k >= 1");
  }
  // k heralds each followed by the dead time fit iff the trial count stays
  // within the budget left after k dead times.
  const double budget_us = t_us - static_cast<double>(k) * params.catch_dead_time_us;
  if (budget_us < params.cycle_us * k) return 0.0;
  const auto n = static_cast<std::int64_t>(std::floor(budget_us / params.cycle_us + 1e-9));
  return binomial_tail_ge(n, params.p_exc, k);
}

double prob_k_pairs_within_mc(double t_us, int k, const SourceParams& params,
                              std::uint64_t samples, Rng& rng) {
  params.validate();
  if (samples == 0) {
    throw std::invalid_argument("prob_k_pairs_within_mc: samples must be positive");
  }
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    double t = 0.0;
    bool ok = true;
    for (int i = 0; i < k; ++i) {
      t += static_cast<double>(rng.geometric_trials(params.p_exc)) * params.cycle_us +
           params.catch_dead_time_us;
      if (t > t_us) {
        ok = false;
        break;
      }
    }
    hits += ok ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

std::vector<EPRRecord> catch_freeze_reshuffle_release(const std::array<int, 4>& order,
                                                      const SourceParams& params,
                                                      MemoryArray& array,
                                                      const CalibrationTable& calibration,
                                                      Rng& rng) {
  params.validate();
  std::array<bool, 4> seen{};
  for (int p : order) {
    if (p < 1 || p > 4 || seen[p - 1]) {
      throw std::invalid_argument("release order must be a permutation of 1..4");
    }
    seen[p - 1] = true;
  }

  std::vector<int> free_cells;
  for (int c = 1; c <= ArrayGeometry::kCellCount && free_cells.size() < 4; ++c) {
    if (!array.occupied(c)) free_cells.push_back(c);
  }
  if (free_cells.size() < 4) {
    throw std::runtime_error("catch_freeze_reshuffle_release: need 4 free cells");
  }

  std::vector<EPRRecord> records;
  records.reserve(4);
  double t = 0.0;
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t trials = rng.geometric_trials(params.p_exc);
    if (trials > params.max_trials) {
      throw std::runtime_error("catch_freeze_reshuffle_release: herald timeout");
    }
    EPRRecord rec;
    rec.pair_id = i + 1;
    rec.herald_time_us = t + static_cast<double>(trials) * params.cycle_us;
    rec.cell = free_cells[i];
    rec.store_time_us = rec.herald_time_us + params.catch_dead_time_us;
    t = rec.store_time_us;

    // The array tracks occupancy, timing, and crosstalk for the idler; the
    // two-qubit state itself lives outside and sees the same channels.
    array.write(rec.cell, polarization_to_density(Polarization::h()), rec.store_time_us, rng);
    DensityMatrix pair = DensityMatrix::werner(params.f_source);
    pair = apply_subsystem_operator(
        pair, sample_arm_operator(calibration[rec.cell - 1].in, rng), 1);
    rec.rho_final = pair;
    records.push_back(std::move(rec));
  }

  // Release block: four consecutive clock slots starting at the first slot
  // boundary after the last catch completes.
  const auto start_slot = static_cast<std::int64_t>(std::ceil(t / kSlotUs - 1e-9));
  const PhysicsParams& phys = array.physics();
  const ArrayGeometry& geom = array.geometry();
  Ket psi_plus(4);
  psi_plus << 0, M_SQRT1_2, M_SQRT1_2, 0;

  for (int j = 0; j < 4; ++j) {
    EPRRecord& rec = records[order[j] - 1];
    rec.release_slot = start_slot + j;
    const double release_us = static_cast<double>(rec.release_slot) * kSlotUs;
    const ReadOutcome ro = array.read(rec.cell, release_us, rng);
    rec.storage_us = ro.storage_us;

    DensityMatrix pair = depolarize_subsystem(
        rec.rho_final, 1,
        crosstalk_depolarization(ro.neighbor_ops, phys.per_neighbor_op_depolarization()));
    pair = depolarize_subsystem(
        pair, 1,
        decay_depolarization(ro.storage_us, phys.cell_tau_f_us(geom, rec.cell), phys.decay_law));
    pair = apply_subsystem_operator(
        pair, sample_arm_operator(calibration[rec.cell - 1].out, rng), 1);
    rec.rho_final = pair;
    rec.fidelity = fidelity_to_pure(rec.rho_final, psi_plus);
  }
  return records;
}

BellFidelityEstimate pair_fidelity_via_tomography(const DensityMatrix& rho4,
                                                  std::uint64_t shots_per_basis, Rng& rng) {
  const double rxx = pauli_coefficient(sample_coincidences(rho4, PauliBasis::XX, shots_per_basis, rng));
  const double ryy = pauli_coefficient(sample_coincidences(rho4, PauliBasis::YY, shots_per_basis, rng));
  const double rzz = pauli_coefficient(sample_coincidences(rho4, PauliBasis::ZZ, shots_per_basis, rng));
  return bell_fidelity(rxx, ryy, rzz);
}

}  // namespace raqmsim
