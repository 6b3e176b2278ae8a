#pragma once

#include <complex>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "raqmsim/rng.hpp"

namespace raqmsim {

using Complex = std::complex<double>;
using Ket = Eigen::VectorXcd;

// Polarization qubit cos(theta)|H> + e^{i phi} sin(theta)|V>.
// theta in [0, pi/2], phi in [0, 2pi).
struct Polarization {
  double theta = 0.0;
  double phi = 0.0;

  static Polarization h() { return {0.0, 0.0}; }
  static Polarization v() { return {M_PI_2, 0.0}; }
  static Polarization plus() { return {M_PI_4, 0.0}; }
  static Polarization left() { return {M_PI_4, M_PI_2}; }

  bool valid() const;
};

// The four canonical input labels used by instruction sequences.
enum class PolLabel : std::uint8_t { H, V, Plus, L };

Polarization polarization_of(PolLabel label);
char pol_char(PolLabel label);
PolLabel pol_from_char(char c);

Ket polarization_ket(const Polarization& p);

// Dense single-qubit (2x2) or photon-pair (4x4) density matrix.
// Construction and every channel in this library keep the state Hermitian,
// trace one, and positive semidefinite to tolerance.
class DensityMatrix {
 public:
  static constexpr double kHermTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kEigenFloor = -1e-10;

  explicit DensityMatrix(Eigen::MatrixXcd entries);

  static DensityMatrix pure(const Ket& ket);
  static DensityMatrix maximally_mixed(int dim);
  static DensityMatrix bell_psi_plus();        // (|HV>+|VH>)/sqrt(2) projector
  static DensityMatrix werner(double fidelity);  // mix of psi+ with I/4

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXcd& mat() const { return m_; }
  Complex entry(int i, int j) const { return m_(i, j); }

  bool is_valid(std::string* why = nullptr) const;
  double min_eigenvalue() const;

  // Projects onto the PSD cone and renormalizes. Only for callers that have
  // detected an invalid state and explicitly want repair; channels in this
  // library never need it.
  DensityMatrix renormalized_psd_projection() const;

 private:
  Eigen::MatrixXcd m_;
};

DensityMatrix polarization_to_density(const Polarization& p);

// Overlap <psi|rho|psi>. Throws on dimension mismatch.
double fidelity_to_pure(const DensityMatrix& rho, const Ket& target);

// rho' = (1-p) rho + p I/dim. Throws unless 0 <= p <= 1.
DensityMatrix apply_depolarizing(const DensityMatrix& rho, double p);

// Pair-state helpers. Subsystem 0 is the first tensor factor (signal),
// subsystem 1 the second (idler).
DensityMatrix depolarize_subsystem(const DensityMatrix& rho4, int subsystem, double p);
// rho -> (M rho M^dag) / tr, M acting on one factor. Trace renormalized, so a
// non-unitary M models a post-selected filter.
DensityMatrix apply_subsystem_operator(const DensityMatrix& rho4, const Eigen::Matrix2cd& m,
                                       int subsystem);
Eigen::Matrix2cd partial_trace(const DensityMatrix& rho4, int keep_subsystem);

enum class PauliBasis : std::uint8_t { XX, YY, ZZ };

std::string basis_name(PauliBasis b);

struct PauliBasisCounts {
  PauliBasis basis = PauliBasis::XX;
  std::uint64_t n_pp = 0;
  std::uint64_t n_pm = 0;
  std::uint64_t n_mp = 0;
  std::uint64_t n_mm = 0;

  std::uint64_t total() const { return n_pp + n_pm + n_mp + n_mm; }
};

// (n_pp + n_mm - n_pm - n_mp) / total. Throws on zero total.
double pauli_coefficient(const PauliBasisCounts& counts);

struct BellFidelityEstimate {
  double value = 0.0;
  bool clamped = false;
};

// F = (1 + rho_xx + rho_yy - rho_zz) / 4 against |Psi+>, clamped to [0, 1].
// Finite-count coefficient estimates can legitimately push the raw value
// outside [0, 1]; the flag records that it happened.
BellFidelityEstimate bell_fidelity(double rho_xx, double rho_yy, double rho_zz);

// Multinomial sample of the four joint-projector outcomes of sigma_b x sigma_b.
PauliBasisCounts sample_coincidences(const DensityMatrix& rho4, PauliBasis basis,
                                     std::uint64_t shots, Rng& rng);

// Exact joint-projector probabilities, in the order (++, +-, -+, --).
std::array<double, 4> coincidence_probabilities(const DensityMatrix& rho4, PauliBasis basis);

}  // namespace raqmsim
