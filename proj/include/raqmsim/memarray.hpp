#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "raqmsim/qstate.hpp"
#include "raqmsim/rng.hpp"

namespace raqmsim {

// 12x12 micro-ensemble grid. Two horizontally adjacent micro-ensembles form
// one qubit cell, 72 cells total. Micro-ensembles are indexed row-major
// 0..143; qubit cells 1..72.
struct ArrayGeometry {
  static constexpr int kRows = 12;
  static constexpr int kCols = 12;
  static constexpr int kMicroCount = kRows * kCols;
  static constexpr int kCellCount = kMicroCount / 2;
  static constexpr double kFreqBaseMhz = 85.0;
  static constexpr double kFreqStepMhz = 3.0;

  // cell-1 -> ordered pair of micro-ensemble indices
  std::array<std::pair<int, int>, kCellCount> pairing{};

  // Row-major horizontal pairing: cell c covers columns (2k, 2k+1) of row r.
  static ArrayGeometry standard();

  static int micro_index(int row, int col) { return row * kCols + col; }
  static int micro_row(int m) { return m / kCols; }
  static int micro_col(int m) { return m % kCols; }

  // AOD drive frequency of grid line j (same law in X and Y), j in [0, 11].
  static double frequency_mhz(int line);

  std::pair<int, int> cell_micros(int cell) const;
  int cell_of_micro(int micro) const;

  // Micro-ensembles edge-adjacent to the cell's two sites but outside the
  // cell itself. 6 for an interior cell, fewer at the array boundary.
  std::vector<int> cell_neighbor_micros(int cell) const;

  // True when the 72 pairs cover all 144 micro-ensembles exactly once.
  bool is_bijective_pairing() const;
};

enum class DecayLaw : std::uint8_t { Exponential, Gaussian };

struct PhysicsParams {
  // Per-micro-ensemble maps (144 entries, row-major).
  std::array<double, ArrayGeometry::kMicroCount> tau_coherence_us{};
  std::array<double, ArrayGeometry::kMicroCount> eta_atoms{};  // combined write*read

  double crosstalk_round_infidelity = 0.01;  // fidelity loss of one 6-neighbor round
  // Fidelity 1/e time is this multiple of the cell coherence time. The default
  // puts the array-average pure-state fidelity at 500 us storage near 0.92.
  double fidelity_decay_scale = 5.74;
  double access_time_us = 1.0;
  double settle_time_ns = 800.0;
  double gate_window_ns = 200.0;
  double fidelity_floor = 0.5;  // single-qubit fully mixed
  DecayLaw decay_law = DecayLaw::Exponential;

  // Radial maps: higher efficiency and coherence at the array center,
  // center-to-corner ratio 5:3, normalized to mean eta 0.055 and mean tau 500.
  static PhysicsParams defaults();
  // Unit efficiency, no decay, no crosstalk.
  static PhysicsParams ideal();

  void validate() const;  // throws std::invalid_argument

  double cell_eta(const ArrayGeometry& g, int cell) const;
  double cell_eta_write(const ArrayGeometry& g, int cell) const;  // sqrt split
  double cell_eta_read(const ArrayGeometry& g, int cell) const;
  double cell_tau_f_us(const ArrayGeometry& g, int cell) const;

  // Depolarization probability of a single neighboring micro-ensemble access.
  // One full round (6 neighbors) of these on a pure state costs
  // crosstalk_round_infidelity in fidelity.
  double per_neighbor_op_depolarization() const;
};

// AOD line-switch latency: transit time of the acoustic wave across the beam.
// Beam waist in um, sound speed in m/s, result in us.
double switching_time_us(double beam_waist_um, double sound_speed_m_per_s);

// Depolarization strengths of the two storage channels; shared by the
// single-qubit channels below and the idler half of a stored pair.
double decay_depolarization(double dt_us, double tau_f_us, DecayLaw law);
double crosstalk_depolarization(int neighbor_ops, double per_op_p);

// Depolarizing decay toward I/2 after dt of storage.
DensityMatrix decohere_channel(const DensityMatrix& rho, double dt_us, double tau_f_us,
                               DecayLaw law = DecayLaw::Exponential);

// Accumulated crosstalk of neighbor_ops single-site accesses, each an
// independent depolarizing kick of strength per_op_p.
DensityMatrix crosstalk_channel(const DensityMatrix& rho, int neighbor_ops, double per_op_p);

struct CellState {
  bool registered = false;   // a write happened and no read has consumed it
  bool excitation = false;   // the spin wave is physically present
  std::optional<DensityMatrix> rho;
  double t_write_us = 0.0;
  int neighbor_ops_since_write = 0;
};

enum class WriteOutcome : std::uint8_t { Stored, Lost };

struct ReadOutcome {
  std::optional<DensityMatrix> state;  // nullopt = Lost
  double storage_us = 0.0;
  int neighbor_ops = 0;
};

// Thrown when a caller breaks the write-once/read-once discipline. This is a
// sequencing bug upstream, never a physics outcome.
class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class MemoryArray {
 public:
  MemoryArray(ArrayGeometry geometry, PhysicsParams physics);

  // Stores rho into the cell with probability eta_write. The cell becomes
  // registered either way: a lost excitation still occupies the slot until
  // the sequence reads it out. Throws ProtocolViolation on an occupied cell.
  WriteOutcome write(int cell, const DensityMatrix& rho, double t_us, Rng& rng);

  // Consumes the cell. Returns the post-storage state with probability
  // eta_read when the excitation survived the write; Lost otherwise.
  // Throws ProtocolViolation on an empty cell or t < t_write.
  ReadOutcome read(int cell, double t_us, Rng& rng);

  // One addressing operation on a micro-ensemble: bumps the crosstalk
  // counter of every registered cell that borders it.
  void access_micro(int micro);

  bool occupied(int cell) const;
  const CellState& cell_state(int cell) const;
  int occupied_count() const;

  const ArrayGeometry& geometry() const { return geometry_; }
  const PhysicsParams& physics() const { return physics_; }

 private:
  void check_cell(int cell) const;

  ArrayGeometry geometry_;
  PhysicsParams physics_;
  std::array<CellState, ArrayGeometry::kCellCount> cells_;
  // micro -> cells whose neighbor set contains it
  std::array<std::vector<int>, ArrayGeometry::kMicroCount> crosstalk_targets_;
};

}  // namespace raqmsim
