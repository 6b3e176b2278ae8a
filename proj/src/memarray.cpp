#include "raqmsim/memarray.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace raqmsim {

ArrayGeometry ArrayGeometry::standard() {
  ArrayGeometry g;
  int cell = 0;
  for (int row = 0; row < kRows; ++row) {
    for (int k = 0; k < kCols / 2; ++k) {
      g.pairing[cell] = {micro_index(row, 2 * k), micro_index(row, 2 * k + 1)};
      ++cell;
    }
  }
  return g;
}

double ArrayGeometry::frequency_mhz(int line) {
  if (line < 0 || line >= kRows) {
    throw std::out_of_range("frequency_mhz: line index out of range");
  }
  return kFreqBaseMhz + kFreqStepMhz * line;
}

std::pair<int, int> ArrayGeometry::cell_micros(int cell) const {
  if (cell < 1 || cell > kCellCount) {
    throw std::out_of_range("cell index out of range");
  }
  return pairing[cell - 1];
}

int ArrayGeometry::cell_of_micro(int micro) const {
  for (int c = 0; c < kCellCount; ++c) {
    if (pairing[c].first == micro || pairing[c].second == micro) {
      return c + 1;
    }
  }
  throw std::out_of_range("micro index not covered by any cell");
}

std::vector<int> ArrayGeometry::cell_neighbor_micros(int cell) const {
  const auto [a, b] = cell_micros(cell);
  std::vector<int> neighbors;
  for (int site : {a, b}) {
    const int r = micro_row(site);
    const int c = micro_col(site);
    const int candidates[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& rc : candidates) {
      if (rc[0] < 0 || rc[0] >= kRows || rc[1] < 0 || rc[1] >= kCols) continue;
      const int m = micro_index(rc[0], rc[1]);
      if (m == a || m == b) continue;
      if (std::find(neighbors.begin(), neighbors.end(), m) == neighbors.end()) {
        neighbors.push_back(m);
      }
    }
  }
  return neighbors;
}

bool ArrayGeometry::is_bijective_pairing() const {
  std::array<int, kMicroCount> hits{};
  for (const auto& [a, b] : pairing) {
    if (a < 0 || a >= kMicroCount || b < 0 || b >= kMicroCount) return false;
    ++hits[a];
    ++hits[b];
  }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

PhysicsParams PhysicsParams::defaults() {
  PhysicsParams p;
  // Optical-depth-like radial weight, 5 at the center falling to 3 at the
  // corners, then rescaled to the target means.
  std::array<double, ArrayGeometry::kMicroCount> weight{};
  const double cr = (ArrayGeometry::kRows - 1) / 2.0;
  const double cc = (ArrayGeometry::kCols - 1) / 2.0;
  const double dmax = std::hypot(cr, cc);
  double sum = 0.0;
  for (int m = 0; m < ArrayGeometry::kMicroCount; ++m) {
    const double d = std::hypot(ArrayGeometry::micro_row(m) - cr, ArrayGeometry::micro_col(m) - cc);
    weight[m] = 5.0 - 2.0 * d / dmax;
    sum += weight[m];
  }
  const double mean = sum / ArrayGeometry::kMicroCount;
  for (int m = 0; m < ArrayGeometry::kMicroCount; ++m) {
    p.eta_atoms[m] = 0.055 * weight[m] / mean;
    p.tau_coherence_us[m] = 500.0 * weight[m] / mean;
  }
  return p;
}

PhysicsParams PhysicsParams::ideal() {
  PhysicsParams p;
  p.eta_atoms.fill(1.0);
  p.tau_coherence_us.fill(std::numeric_limits<double>::infinity());
  p.crosstalk_round_infidelity = 0.0;
  return p;
}

void PhysicsParams::validate() const {
  for (double eta : eta_atoms) {
    if (!(eta > 0.0) || eta > 1.0) {
      throw std::invalid_argument("PhysicsParams: efficiencies must be in (0, 1]");
    }
  }
  for (double tau : tau_coherence_us) {
    if (!(tau > 0.0)) {
      throw std::invalid_argument("PhysicsParams: coherence times must be positive");
    }
  }
  if (crosstalk_round_infidelity < 0.0 || crosstalk_round_infidelity > 0.1) {
    throw std::invalid_argument("PhysicsParams: crosstalk_round_infidelity must be in [0, 0.1]");
  }
  if (!(access_time_us > 0.0) || !(settle_time_ns > 0.0) || !(gate_window_ns > 0.0)) {
    throw std::invalid_argument("PhysicsParams: times must be positive");
  }
  // one micro-ensemble access = line switch + storage/retrieval gate
  if (std::abs(access_time_us * 1000.0 - (settle_time_ns + gate_window_ns)) > 1e-9) {
    throw std::invalid_argument(
        "PhysicsParams: access time must equal settle time plus gate window");
  }
  if (!(fidelity_decay_scale > 0.0)) {
    throw std::invalid_argument("PhysicsParams: fidelity_decay_scale must be positive");
  }
}

double PhysicsParams::cell_eta(const ArrayGeometry& g, int cell) const {
  const auto [a, b] = g.cell_micros(cell);
  return 0.5 * (eta_atoms[a] + eta_atoms[b]);
}

double PhysicsParams::cell_eta_write(const ArrayGeometry& g, int cell) const {
  return std::sqrt(cell_eta(g, cell));
}

double PhysicsParams::cell_eta_read(const ArrayGeometry& g, int cell) const {
  return std::sqrt(cell_eta(g, cell));
}

double PhysicsParams::cell_tau_f_us(const ArrayGeometry& g, int cell) const {
  const auto [a, b] = g.cell_micros(cell);
  return fidelity_decay_scale * 0.5 * (tau_coherence_us[a] + tau_coherence_us[b]);
}

double PhysicsParams::per_neighbor_op_depolarization() const {
  // A pure state loses p/2 in fidelity under depolarizing strength p, so one
  // 6-neighbor round at infidelity eps needs p6 = 2*eps, split over 6 ops.
  return 2.0 * crosstalk_round_infidelity / 6.0;
}

double switching_time_us(double beam_waist_um, double sound_speed_m_per_s) {
  if (!(beam_waist_um > 0.0) || !(sound_speed_m_per_s > 0.0)) {
    throw std::invalid_argument("switching_time_us: inputs must be positive");
  }
  // um / (m/s) = us
  return beam_waist_um / sound_speed_m_per_s;
}

double decay_depolarization(double dt_us, double tau_f_us, DecayLaw law) {
  if (dt_us < 0.0) {
    throw std::invalid_argument("decay_depolarization: dt must be >= 0");
  }
  if (std::isinf(tau_f_us)) {
    return 0.0;
  }
  const double x = dt_us / tau_f_us;
  return 1.0 - std::exp(law == DecayLaw::Exponential ? -x : -x * x);
}

double crosstalk_depolarization(int neighbor_ops, double per_op_p) {
  if (neighbor_ops < 0) {
    throw std::invalid_argument("crosstalk_depolarization: neighbor_ops must be >= 0");
  }
  // n independent depolarizing kicks compose into one.
  return 1.0 - std::pow(1.0 - per_op_p, neighbor_ops);
}

DensityMatrix decohere_channel(const DensityMatrix& rho, double dt_us, double tau_f_us,
                               DecayLaw law) {
  return apply_depolarizing(rho, decay_depolarization(dt_us, tau_f_us, law));
}

DensityMatrix crosstalk_channel(const DensityMatrix& rho, int neighbor_ops, double per_op_p) {
  return apply_depolarizing(rho, crosstalk_depolarization(neighbor_ops, per_op_p));
}

MemoryArray::MemoryArray(ArrayGeometry geometry, PhysicsParams physics)
    : geometry_(geometry), physics_(physics) {
  if (!geometry_.is_bijective_pairing()) {
    throw std::invalid_argument("MemoryArray: pairing must cover all micro-ensembles once");
  }
  physics_.validate();
  for (int cell = 1; cell <= ArrayGeometry::kCellCount; ++cell) {
    for (int m : geometry_.cell_neighbor_micros(cell)) {
      crosstalk_targets_[m].push_back(cell);
    }
  }
}

void MemoryArray::check_cell(int cell) const {
  if (cell < 1 || cell > ArrayGeometry::kCellCount) {
    throw std::out_of_range("cell index out of range");
  }
}

WriteOutcome MemoryArray::write(int cell, const DensityMatrix& rho, double t_us, Rng& rng) {
  check_cell(cell);
  CellState& state = cells_[cell - 1];
  if (state.registered) {
    throw ProtocolViolation("write to occupied cell");
  }
  if (rho.dim() != 2) {
    throw std::invalid_argument("write: expected a single-qubit state");
  }
  const bool stored = rng.bernoulli(physics_.cell_eta_write(geometry_, cell));
  state.registered = true;
  state.excitation = stored;
  state.rho = stored ? std::optional<DensityMatrix>(rho) : std::nullopt;
  state.t_write_us = t_us;
  state.neighbor_ops_since_write = 0;

  const auto [a, b] = geometry_.cell_micros(cell);
  access_micro(a);
  access_micro(b);
  return stored ? WriteOutcome::Stored : WriteOutcome::Lost;
}

ReadOutcome MemoryArray::read(int cell, double t_us, Rng& rng) {
  check_cell(cell);
  CellState& state = cells_[cell - 1];
  if (!state.registered) {
    throw ProtocolViolation("read of empty cell");
  }
  if (t_us < state.t_write_us) {
    throw ProtocolViolation("read before write time");
  }

  ReadOutcome out;
  out.storage_us = t_us - state.t_write_us;
  out.neighbor_ops = state.neighbor_ops_since_write;

  const bool clicked = rng.bernoulli(physics_.cell_eta_read(geometry_, cell));
  if (state.excitation && clicked) {
    DensityMatrix rho = crosstalk_channel(*state.rho, state.neighbor_ops_since_write,
                                          physics_.per_neighbor_op_depolarization());
    rho = decohere_channel(rho, out.storage_us, physics_.cell_tau_f_us(geometry_, cell),
                           physics_.decay_law);
    out.state = std::move(rho);
  }

  // Read consumes the excitation whether or not it produced a photon.
  state.registered = false;
  state.excitation = false;
  state.rho.reset();
  state.neighbor_ops_since_write = 0;

  const auto [a, b] = geometry_.cell_micros(cell);
  access_micro(a);
  access_micro(b);
  return out;
}

void MemoryArray::access_micro(int micro) {
  if (micro < 0 || micro >= ArrayGeometry::kMicroCount) {
    throw std::out_of_range("micro index out of range");
  }
  for (int cell : crosstalk_targets_[micro]) {
    CellState& state = cells_[cell - 1];
    if (state.registered) {
      ++state.neighbor_ops_since_write;
    }
  }
}

bool MemoryArray::occupied(int cell) const {
  check_cell(cell);
  return cells_[cell - 1].registered;
}

const CellState& MemoryArray::cell_state(int cell) const {
  check_cell(cell);
  return cells_[cell - 1];
}

int MemoryArray::occupied_count() const {
  return static_cast<int>(
      std::count_if(cells_.begin(), cells_.end(), [](const CellState& c) { return c.registered; }));
}

}  // namespace raqmsim
