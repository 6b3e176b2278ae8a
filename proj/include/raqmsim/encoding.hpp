#pragma once

#include <array>

#include "raqmsim/qstate.hpp"
#include "raqmsim/rng.hpp"

namespace raqmsim {

// Composed amplitude/phase error of one encoding-conversion chain
// (polarization -> time-bin -> path, or the reverse). The whole chain acts as
// diag(1, r e^{i(dphi + xi)}) on the qubit with xi drawn fresh per shot, then
// trace renormalization. Diagonal states pass through untouched, which is why
// H and V never see the interferometer phase.
struct ConverterCalibration {
  double amp_imbalance = 1.0;      // r, V-arm over H-arm amplitude transmission
  double phase_offset = 0.0;       // radians
  double phase_jitter_sigma = 0.0; // radians per shot
  double arm_delay_us = 1.0;       // one micro-ensemble access time

  static ConverterCalibration identity() { return {}; }

  // Exact inverse of the deterministic part; jitter is kept as-is.
  ConverterCalibration inverse() const;

  void validate() const;  // throws std::invalid_argument
};

// Draws the per-shot phase jitter and returns the chain operator
// diag(1, r e^{i(dphi + xi)}).
Eigen::Matrix2cd sample_arm_operator(const ConverterCalibration& cal, Rng& rng);

// One conversion chain applied to a single-qubit state.
DensityMatrix apply_converter_arm(const DensityMatrix& rho, const ConverterCalibration& cal,
                                  Rng& rng);

// Full input + output chain. Equal to applying the two arms in sequence.
DensityMatrix converter_channel(const DensityMatrix& rho, const ConverterCalibration& cal_in,
                                const ConverterCalibration& cal_out, Rng& rng);

enum class CalibrationQuality : std::uint8_t { Identity, Careful, Fast };

// Draws the calibration state of one chain. Careful mimics a per-cell hand
// calibration; Fast mimics the quick scan used for long sequences and
// occasionally produces a badly tuned cell.
ConverterCalibration sample_miscalibration(CalibrationQuality quality, Rng& rng);

struct CellCalibration {
  ConverterCalibration in;
  ConverterCalibration out;
};

using CalibrationTable = std::array<CellCalibration, 72>;

CalibrationTable make_calibration_table(CalibrationQuality quality, Rng& rng);

// Expected fidelity of the |+> (equivalently |L>) state through a composed
// in+out chain, averaging over the phase jitter. Closed form used for
// calibration checks.
double expected_superposition_fidelity(const ConverterCalibration& cal_in,
                                       const ConverterCalibration& cal_out);

}  // namespace raqmsim
