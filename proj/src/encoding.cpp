#include "raqmsim/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace raqmsim {

namespace {

// One chain draw: careful keeps everything tight, fast leaves a broad phase
// offset whose tail is what pushes the occasional cell below the quantum
// storage threshold.
struct QualityConstants {
  double log_amp_sigma;
  double phase_sigma;
  double jitter_sigma;
};

constexpr QualityConstants kCareful{0.03, 0.05, 0.05};
constexpr QualityConstants kFast{0.06, 0.35, 0.25};

}  // namespace

ConverterCalibration ConverterCalibration::inverse() const {
  ConverterCalibration inv = *this;
  inv.amp_imbalance = 1.0 / amp_imbalance;
  inv.phase_offset = -phase_offset;
  return inv;
}

void ConverterCalibration::validate() const {
  if (!(amp_imbalance > 0.0)) {
    throw std::invalid_argument("ConverterCalibration: amp_imbalance must be positive");
  }
  if (phase_jitter_sigma < 0.0) {
    throw std::invalid_argument("ConverterCalibration: phase_jitter_sigma must be >= 0");
  }
}

Eigen::Matrix2cd sample_arm_operator(const ConverterCalibration& cal, Rng& rng) {
  cal.validate();
  const double xi = rng.normal(0.0, 1.0) * cal.phase_jitter_sigma;
  const Complex z = cal.amp_imbalance * std::exp(Complex(0.0, cal.phase_offset + xi));
  Eigen::Matrix2cd arm;
  arm << 1.0, 0.0, 0.0, z;
  return arm;
}

DensityMatrix apply_converter_arm(const DensityMatrix& rho, const ConverterCalibration& cal,
                                  Rng& rng) {
  if (rho.dim() != 2) {
    throw std::invalid_argument("apply_converter_arm: expected a single-qubit state");
  }
  const Eigen::Matrix2cd arm = sample_arm_operator(cal, rng);
  Eigen::MatrixXcd out = arm * rho.mat() * arm.adjoint();
  return DensityMatrix(out / out.trace().real());
}

DensityMatrix converter_channel(const DensityMatrix& rho, const ConverterCalibration& cal_in,
                                const ConverterCalibration& cal_out, Rng& rng) {
  return apply_converter_arm(apply_converter_arm(rho, cal_in, rng), cal_out, rng);
}

ConverterCalibration sample_miscalibration(CalibrationQuality quality, Rng& rng) {
  if (quality == CalibrationQuality::Identity) {
    return ConverterCalibration::identity();
  }
  const QualityConstants& k = quality == CalibrationQuality::Careful ? kCareful : kFast;
  ConverterCalibration cal;
  cal.amp_imbalance = std::exp(rng.normal(0.0, k.log_amp_sigma));
  cal.phase_offset = rng.normal(0.0, k.phase_sigma);
  cal.phase_jitter_sigma = k.jitter_sigma;
  return cal;
}

CalibrationTable make_calibration_table(CalibrationQuality quality, Rng& rng) {
  CalibrationTable table;
  for (auto& cell : table) {
    cell.in = sample_miscalibration(quality, rng);
    cell.out = sample_miscalibration(quality, rng);
  }
  return table;
}

double expected_superposition_fidelity(const ConverterCalibration& cal_in,
                                       const ConverterCalibration& cal_out) {
  const double r = cal_in.amp_imbalance * cal_out.amp_imbalance;
  const double dphi = cal_in.phase_offset + cal_out.phase_offset;
  const double var = cal_in.phase_jitter_sigma * cal_in.phase_jitter_sigma +
                     cal_out.phase_jitter_sigma * cal_out.phase_jitter_sigma;
  // F = (1 + r^2 + 2 r E[cos(dphi + xi)]) / (2 (1 + r^2)), xi ~ N(0, var)
  const double mean_cos = std::cos(dphi) * std::exp(-var / 2.0);
  return (1.0 + r * r + 2.0 * r * mean_cos) / (2.0 * (1.0 + r * r));
}

}  // namespace raqmsim
