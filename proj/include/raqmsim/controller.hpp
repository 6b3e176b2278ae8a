#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raqmsim/encoding.hpp"
#include "raqmsim/memarray.hpp"
#include "raqmsim/qstate.hpp"
#include "raqmsim/rng.hpp"

namespace raqmsim {

// One memory clock cycle: a full qubit-cell access (two micro-ensembles).
constexpr double kSlotUs = 2.0;
constexpr double kDefaultWindowUs = 500.0;

enum class OpType : std::uint8_t { Write, Read };

struct Instruction {
  std::int64_t slot = 0;
  OpType op = OpType::Write;
  int cell = 1;                  // 1..72
  std::optional<PolLabel> pol;   // Write only
  bool forced = false;           // Read only: injected by the scrolling window

  bool operator==(const Instruction&) const = default;
};

// Filling-dependent write probability: 1 when empty, 0 when full,
// otherwise 0.65 - 0.3 n / 72.
double write_probability(int filling);

// Logical occupancy picture of a sequence, tracked slot by slot.
struct SequenceState {
  std::array<std::optional<std::int64_t>, ArrayGeometry::kCellCount> write_slot{};
  int filling = 0;

  void apply(const Instruction& instr);  // throws ProtocolViolation on misuse
  std::vector<int> empty_cells() const;
  std::vector<int> occupied_cells() const;
};

// Emits a forced read for `slot` when some stored qubit would hit the window
// cap at slot+1. Targets the single oldest such qubit, ties broken by lowest
// cell index.
std::optional<Instruction> apply_scrolling_window(const SequenceState& state, std::int64_t slot,
                                                  double window_us = kDefaultWindowUs);

// Self-consistent random access sequence: write/read chosen per
// write_probability, write targets a uniform empty cell with a uniform
// polarization, read targets a uniform occupied cell.
std::vector<Instruction> generate_random_sequence(int n_ops, Rng& rng);

// Same generator with scrolling-window preemption, for sequences longer than
// the coherence window.
std::vector<Instruction> generate_windowed_sequence(int n_ops, double window_us, Rng& rng);

struct Violation {
  std::size_t index = 0;  // instruction position, or events.size() for end-of-sequence checks
  std::string kind;
  std::string detail;
};

// Replays the sequence and reports every rule breach: read of an empty cell,
// write to an occupied cell, out-of-range cell, non-increasing slots, missing
// or spurious polarization, and window overruns when window_us is given.
// Returns violations instead of throwing.
std::vector<Violation> validate_sequence(std::span<const Instruction> seq,
                                         std::optional<double> window_us = std::nullopt);

// FIFO: n enqueues into cells 1..n at slots 0..n-1, then n dequeues in
// arrival order. Every storage time is n slots.
std::vector<Instruction> queue_sequence(int n, Rng& rng);

// LIFO: n pushes then n pops in reverse order.
std::vector<Instruction> stack_sequence(int n, Rng& rng);

// Sparse arrivals at the given slots (qubit i into cell i+1), then one
// contiguous flush block reading cells in flush_order.
std::vector<Instruction> buffer_sequence(const std::vector<std::int64_t>& arrival_slots,
                                         const std::vector<int>& flush_order, Rng& rng);

// Interleaved variants: each slot enqueues/pushes or dequeues/pops with equal
// probability under the structure's discipline, n qubits in total.
std::vector<Instruction> interleaved_queue_sequence(int n, Rng& rng);
std::vector<Instruction> interleaved_stack_sequence(int n, Rng& rng);

enum class Outcome : std::uint8_t { Stored, Lost, Retrieved, ForcedRetrieved };

struct TraceEvent {
  Instruction instr;
  Outcome outcome = Outcome::Stored;
  std::optional<double> fidelity;      // retrieved reads
  std::optional<double> storage_us;    // retrieved reads
  std::optional<PolLabel> input_pol;   // reads: polarization originally written

  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::uint64_t seed = 0;
  std::string config_hash;

  bool operator==(const Trace&) const = default;
};

// Executes the sequence against the array: writes push the input state
// through the cell's input conversion chain into the array, reads pull it
// back through the output chain. Per-read fidelity is evaluated against the
// polarization originally written (exact in simulation).
Trace run_sequence(std::span<const Instruction> seq, MemoryArray& array,
                   const CalibrationTable& calibration, Rng& rng);

}  // namespace raqmsim
