#include "raqmsim/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace raqmsim {

namespace {

constexpr std::array<PolLabel, 4> kPolAlphabet = {PolLabel::H, PolLabel::V, PolLabel::Plus,
                                                  PolLabel::L};

PolLabel random_pol(Rng& rng) { return kPolAlphabet[rng.uniform_below(4)]; }

int pick(const std::vector<int>& cells, Rng& rng) {
  return cells[rng.uniform_below(cells.size())];
}

}  // namespace

double write_probability(int filling) {
  if (filling < 0 || filling > ArrayGeometry::kCellCount) {
    throw std::out_of_range("write_probability: filling out of range");
  }
  if (filling == 0) return 1.0;
  if (filling == ArrayGeometry::kCellCount) return 0.0;
  return 0.65 - 0.3 * filling / static_cast<double>(ArrayGeometry::kCellCount);
}

void SequenceState::apply(const Instruction& instr) {
  if (instr.cell < 1 || instr.cell > ArrayGeometry::kCellCount) {
    throw ProtocolViolation("cell index out of range");
  }
  auto& slot = write_slot[instr.cell - 1];
  if (instr.op == OpType::Write) {
    if (slot.has_value()) {
      throw ProtocolViolation("write to occupied cell");
    }
    slot = instr.slot;
    ++filling;
  } else {
    if (!slot.has_value()) {
      throw ProtocolViolation("read of empty cell");
    }
    slot.reset();
    --filling;
  }
}

std::vector<int> SequenceState::empty_cells() const {
  std::vector<int> cells;
  for (int c = 1; c <= ArrayGeometry::kCellCount; ++c) {
    if (!write_slot[c - 1].has_value()) cells.push_back(c);
  }
  return cells;
}

std::vector<int> SequenceState::occupied_cells() const {
  std::vector<int> cells;
  for (int c = 1; c <= ArrayGeometry::kCellCount; ++c) {
    if (write_slot[c - 1].has_value()) cells.push_back(c);
  }
  return cells;
}

std::optional<Instruction> apply_scrolling_window(const SequenceState& state, std::int64_t slot,
                                                  double window_us) {
  std::optional<std::int64_t> oldest;
  int oldest_cell = 0;
  for (int c = 1; c <= ArrayGeometry::kCellCount; ++c) {
    const auto& w = state.write_slot[c - 1];
    if (!w.has_value()) continue;
    // Age the qubit would reach at the start of slot+1; reading now keeps it
    // strictly inside the window.
    const double next_age_us = static_cast<double>(slot + 1 - *w) * kSlotUs;
    if (next_age_us >= window_us && (!oldest || *w < *oldest)) {
      oldest = *w;
      oldest_cell = c;
    }
  }
  if (!oldest) return std::nullopt;
  Instruction instr;
  instr.slot = slot;
  instr.op = OpType::Read;
  instr.cell = oldest_cell;
  instr.forced = true;
  return instr;
}

namespace {

Instruction algorithm_step(const SequenceState& state, std::int64_t slot, Rng& rng) {
  Instruction instr;
  instr.slot = slot;
  const bool do_write = rng.bernoulli(write_probability(state.filling));
  if (do_write) {
    instr.op = OpType::Write;
    instr.cell = pick(state.empty_cells(), rng);
    instr.pol = random_pol(rng);
  } else {
    instr.op = OpType::Read;
    instr.cell = pick(state.occupied_cells(), rng);
  }
  return instr;
}

}  // namespace

std::vector<Instruction> generate_random_sequence(int n_ops, Rng& rng) {
  if (n_ops < 1) {
    throw std::invalid_argument("generate_random_sequence: n_ops must be >= 1");
  }
  std::vector<Instruction> seq;
  seq.reserve(n_ops);
  SequenceState state;
  for (std::int64_t slot = 0; slot < n_ops; ++slot) {
    Instruction instr = algorithm_step(state, slot, rng);
    state.apply(instr);
    seq.push_back(instr);
  }
  return seq;
}

std::vector<Instruction> generate_windowed_sequence(int n_ops, double window_us, Rng& rng) {
  if (n_ops < 1) {
    throw std::invalid_argument("generate_windowed_sequence: n_ops must be >= 1");
  }
  if (!(window_us > 0.0)) {
    throw std::invalid_argument("generate_windowed_sequence: window must be positive");
  }
  std::vector<Instruction> seq;
  seq.reserve(n_ops);
  SequenceState state;
  for (std::int64_t slot = 0; slot < n_ops; ++slot) {
    Instruction instr;
    if (auto forced = apply_scrolling_window(state, slot, window_us)) {
      instr = *forced;
    } else {
      instr = algorithm_step(state, slot, rng);
    }
    state.apply(instr);
    seq.push_back(instr);
  }
  return seq;
}

std::vector<Violation> validate_sequence(std::span<const Instruction> seq,
                                         std::optional<double> window_us) {
  std::vector<Violation> violations;
  std::array<std::optional<std::int64_t>, ArrayGeometry::kCellCount> write_slot{};
  std::optional<std::int64_t> prev_slot;
  int filling = 0;

  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Instruction& instr = seq[i];
    if (prev_slot && instr.slot <= *prev_slot) {
      violations.push_back({i, "slot-order", "slots must be strictly increasing"});
    }
    prev_slot = instr.slot;

    if (instr.cell < 1 || instr.cell > ArrayGeometry::kCellCount) {
      violations.push_back({i, "cell-range", "cell index outside 1..72"});
      continue;
    }
    auto& w = write_slot[instr.cell - 1];
    if (instr.op == OpType::Write) {
      if (!instr.pol.has_value()) {
        violations.push_back({i, "missing-pol", "write carries no polarization"});
      }
      if (w.has_value()) {
        violations.push_back({i, "write-occupied", "write to an occupied cell"});
      } else {
        ++filling;
      }
      w = instr.slot;  // replay continues with the latest write
    } else {
      if (instr.pol.has_value()) {
        violations.push_back({i, "spurious-pol", "read carries a polarization"});
      }
      if (!w.has_value()) {
        violations.push_back({i, "read-empty", "read of an empty cell"});
      } else {
        if (window_us) {
          const double storage = static_cast<double>(instr.slot - *w) * kSlotUs;
          if (storage > *window_us) {
            violations.push_back({i, "window-exceeded", "storage time beyond the window"});
          }
        }
        w.reset();
        --filling;
      }
    }
    if (filling < 0 || filling > ArrayGeometry::kCellCount) {
      violations.push_back({i, "filling-range", "filling outside 0..72"});
    }
  }

  if (window_us && prev_slot) {
    for (int c = 1; c <= ArrayGeometry::kCellCount; ++c) {
      const auto& w = write_slot[c - 1];
      if (w && static_cast<double>(*prev_slot - *w) * kSlotUs > *window_us) {
        violations.push_back(
            {seq.size(), "window-exceeded", "qubit still stored beyond the window at sequence end"});
      }
    }
  }
  return violations;
}

std::vector<Instruction> queue_sequence(int n, Rng& rng) {
  if (n < 1 || n > ArrayGeometry::kCellCount) {
    throw std::invalid_argument("queue_sequence: n must be in 1..72");
  }
  std::vector<Instruction> seq;
  seq.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    seq.push_back({i, OpType::Write, i + 1, random_pol(rng), false});
  }
  for (int i = 0; i < n; ++i) {
    seq.push_back({n + i, OpType::Read, i + 1, std::nullopt, false});
  }
  return seq;
}

std::vector<Instruction> stack_sequence(int n, Rng& rng) {
  if (n < 1 || n > ArrayGeometry::kCellCount) {
    throw std::invalid_argument("stack_sequence: n must be in 1..72");
  }
  std::vector<Instruction> seq;
  seq.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    seq.push_back({i, OpType::Write, i + 1, random_pol(rng), false});
  }
  for (int i = 0; i < n; ++i) {
    seq.push_back({n + i, OpType::Read, n - i, std::nullopt, false});
  }
  return seq;
}

std::vector<Instruction> buffer_sequence(const std::vector<std::int64_t>& arrival_slots,
                                         const std::vector<int>& flush_order, Rng& rng) {
  const int n = static_cast<int>(arrival_slots.size());
  if (n < 1 || n > ArrayGeometry::kCellCount) {
    throw std::invalid_argument("buffer_sequence: capacity exceeded or empty");
  }
  if (static_cast<int>(flush_order.size()) != n) {
    throw std::invalid_argument("buffer_sequence: flush_order size mismatch");
  }
  std::vector<bool> seen(n, false);
  for (int c : flush_order) {
    if (c < 1 || c > n || seen[c - 1]) {
      throw std::invalid_argument("buffer_sequence: flush_order is not a permutation");
    }
    seen[c - 1] = true;
  }
  for (int i = 1; i < n; ++i) {
    if (arrival_slots[i] <= arrival_slots[i - 1]) {
      throw std::invalid_argument("buffer_sequence: arrival slots must be strictly increasing");
    }
  }

  std::vector<Instruction> seq;
  seq.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    seq.push_back({arrival_slots[i], OpType::Write, i + 1, random_pol(rng), false});
  }
  const std::int64_t flush_start = arrival_slots.back() + 1;
  for (int j = 0; j < n; ++j) {
    seq.push_back({flush_start + j, OpType::Read, flush_order[j], std::nullopt, false});
  }
  return seq;
}

namespace {

std::vector<Instruction> interleaved_sequence(int n, bool lifo, Rng& rng) {
  if (n < 1 || n > ArrayGeometry::kCellCount) {
    throw std::invalid_argument("interleaved sequence: n must be in 1..72");
  }
  std::vector<Instruction> seq;
  std::vector<int> live;  // cells currently stored, in arrival order
  int next_in = 1;
  int done = 0;
  std::int64_t slot = 0;
  while (done < n) {
    const bool can_in = next_in <= n;
    const bool can_out = !live.empty();
    bool do_in;
    if (can_in && can_out) {
      do_in = rng.bernoulli(0.5);
    } else {
      do_in = can_in;
    }
    if (do_in) {
      seq.push_back({slot, OpType::Write, next_in, random_pol(rng), false});
      live.push_back(next_in);
      ++next_in;
    } else {
      int cell;
      if (lifo) {
        cell = live.back();
        live.pop_back();
      } else {
        cell = live.front();
        live.erase(live.begin());
      }
      seq.push_back({slot, OpType::Read, cell, std::nullopt, false});
      ++done;
    }
    ++slot;
  }
  return seq;
}

}  // namespace

std::vector<Instruction> interleaved_queue_sequence(int n, Rng& rng) {
  return interleaved_sequence(n, false, rng);
}

std::vector<Instruction> interleaved_stack_sequence(int n, Rng& rng) {
  return interleaved_sequence(n, true, rng);
}

Trace run_sequence(std::span<const Instruction> seq, MemoryArray& array,
                   const CalibrationTable& calibration, Rng& rng) {
  Trace trace;
  trace.events.reserve(seq.size());
  std::array<std::optional<PolLabel>, ArrayGeometry::kCellCount> written_pol{};

  for (const Instruction& instr : seq) {
    TraceEvent event;
    event.instr = instr;
    const double t_us = static_cast<double>(instr.slot) * kSlotUs;
    const CellCalibration& cal = calibration[instr.cell - 1];

    if (instr.op == OpType::Write) {
      if (!instr.pol.has_value()) {
        throw ProtocolViolation("write instruction without polarization");
      }
      const DensityMatrix in = polarization_to_density(polarization_of(*instr.pol));
      const DensityMatrix converted = apply_converter_arm(in, cal.in, rng);
      const WriteOutcome wo = array.write(instr.cell, converted, t_us, rng);
      written_pol[instr.cell - 1] = *instr.pol;
      event.outcome = wo == WriteOutcome::Stored ? Outcome::Stored : Outcome::Lost;
    } else {
      const ReadOutcome ro = array.read(instr.cell, t_us, rng);
      event.input_pol = written_pol[instr.cell - 1];
      written_pol[instr.cell - 1].reset();
      if (ro.state.has_value()) {
        const DensityMatrix out = apply_converter_arm(*ro.state, cal.out, rng);
        if (!event.input_pol.has_value()) {
          throw ProtocolViolation("retrieved a qubit with no recorded input polarization");
        }
        const Ket target = polarization_ket(polarization_of(*event.input_pol));
        event.fidelity = fidelity_to_pure(out, target);
        event.storage_us = ro.storage_us;
        event.outcome = instr.forced ? Outcome::ForcedRetrieved : Outcome::Retrieved;
      } else {
        event.outcome = Outcome::Lost;
      }
    }
    trace.events.push_back(std::move(event));
  }
  return trace;
}

}  // namespace raqmsim
