#include "raqmsim/qstate.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace raqmsim {

namespace {

const Complex kI{0.0, 1.0};

Eigen::Matrix2cd pauli(char which) {
  Eigen::Matrix2cd m;
  switch (which) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, -kI, kI, 0; break;
    case 'z': m << 1, 0, 0, -1; break;
    default: throw std::logic_error("unknown Pauli");
  }
  return m;
}

char basis_pauli(PauliBasis b) {
  switch (b) {
    case PauliBasis::XX: return 'x';
    case PauliBasis::YY: return 'y';
    case PauliBasis::ZZ: return 'z';
  }
  throw std::logic_error("unknown basis");
}

}  // namespace

bool Polarization::valid() const {
  return theta >= 0.0 && theta <= M_PI_2 + 1e-12 && phi >= 0.0 && phi < 2.0 * M_PI;
}

Polarization polarization_of(PolLabel label) {
  switch (label) {
    case PolLabel::H: return Polarization::h();
    case PolLabel::V: return Polarization::v();
    case PolLabel::Plus: return Polarization::plus();
    case PolLabel::L: return Polarization::left();
  }
  throw std::logic_error("unknown polarization label");
}

char pol_char(PolLabel label) {
  switch (label) {
    case PolLabel::H: return 'H';
    case PolLabel::V: return 'V';
    case PolLabel::Plus: return '+';
    case PolLabel::L: return 'L';
  }
  throw std::logic_error("unknown polarization label");
}

PolLabel pol_from_char(char c) {
  switch (c) {
    case 'H': return PolLabel::H;
    case 'V': return PolLabel::V;
    case '+': return PolLabel::Plus;
    case 'L': return PolLabel::L;
    default: throw std::invalid_argument(std::string("unknown polarization token: ") + c);
  }
}

Ket polarization_ket(const Polarization& p) {
  Ket ket(2);
  ket(0) = std::cos(p.theta);
  ket(1) = std::exp(kI * p.phi) * std::sin(p.theta);
  return ket;
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries) : m_(std::move(entries)) {
  if ((m_.rows() != 2 && m_.rows() != 4) || m_.rows() != m_.cols()) {
    throw std::invalid_argument("DensityMatrix: dimension must be 2 or 4");
  }
}

DensityMatrix DensityMatrix::pure(const Ket& ket) {
  const double norm = ket.norm();
  if (norm <= 0.0) {
    throw std::invalid_argument("DensityMatrix::pure: zero ket");
  }
  Ket k = ket / norm;
  return DensityMatrix(k * k.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::bell_psi_plus() {
  Ket psi(4);
  psi << 0, 1, 1, 0;
  return pure(psi);
}

DensityMatrix DensityMatrix::werner(double fidelity) {
  if (fidelity < 0.25 || fidelity > 1.0) {
    throw std::invalid_argument("werner: fidelity must be in [0.25, 1]");
  }
  // F = w + (1-w)/4  =>  w = (4F-1)/3
  const double w = (4.0 * fidelity - 1.0) / 3.0;
  Eigen::MatrixXcd m =
      w * bell_psi_plus().mat() + (1.0 - w) * Eigen::MatrixXcd::Identity(4, 4) / 4.0;
  return DensityMatrix(std::move(m));
}

bool DensityMatrix::is_valid(std::string* why) const {
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermTol) {
    if (why) *why = "not Hermitian";
    return false;
  }
  if (std::abs(m_.trace().real() - 1.0) > kTraceTol || std::abs(m_.trace().imag()) > kTraceTol) {
    if (why) *why = "trace != 1";
    return false;
  }
  if (min_eigenvalue() < kEigenFloor) {
    if (why) *why = "negative eigenvalue";
    return false;
  }
  return true;
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::renormalized_psd_projection() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m_);
  Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(0.0);
  const double sum = vals.sum();
  if (sum <= 0.0) {
    throw std::runtime_error("PSD projection of a non-positive matrix");
  }
  vals /= sum;
  Eigen::MatrixXcd m =
      solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().adjoint();
  return DensityMatrix(std::move(m));
}

DensityMatrix polarization_to_density(const Polarization& p) {
  if (!p.valid()) {
    throw std::invalid_argument("polarization_to_density: invalid polarization");
  }
  return DensityMatrix::pure(polarization_ket(p));
}

double fidelity_to_pure(const DensityMatrix& rho, const Ket& target) {
  if (rho.dim() != target.size()) {
    throw std::invalid_argument("fidelity_to_pure: dimension mismatch");
  }
  Ket t = target / target.norm();
  const Complex f = (t.adjoint() * rho.mat() * t)(0, 0);
  return f.real();
}

DensityMatrix apply_depolarizing(const DensityMatrix& rho, double p) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("apply_depolarizing: p must be in [0, 1]");
  }
  const int d = rho.dim();
  Eigen::MatrixXcd m =
      (1.0 - p) * rho.mat() + p * Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
  return DensityMatrix(std::move(m));
}

DensityMatrix depolarize_subsystem(const DensityMatrix& rho4, int subsystem, double p) {
  if (rho4.dim() != 4) {
    throw std::invalid_argument("depolarize_subsystem: need a 4x4 state");
  }
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("depolarize_subsystem: p must be in [0, 1]");
  }
  const Eigen::Matrix2cd reduced = partial_trace(rho4, 1 - subsystem);
  const Eigen::Matrix2cd half = Eigen::Matrix2cd::Identity() * 0.5;
  Eigen::MatrixXcd mixed(4, 4);
  if (subsystem == 0) {
    mixed = Eigen::kroneckerProduct(half, reduced);
  } else {
    mixed = Eigen::kroneckerProduct(reduced, half);
  }
  return DensityMatrix((1.0 - p) * rho4.mat() + p * mixed);
}

DensityMatrix apply_subsystem_operator(const DensityMatrix& rho4, const Eigen::Matrix2cd& m,
                                       int subsystem) {
  if (rho4.dim() != 4) {
    throw std::invalid_argument("apply_subsystem_operator: need a 4x4 state");
  }
  Eigen::Matrix4cd op;
  if (subsystem == 0) {
    op = Eigen::kroneckerProduct(m, Eigen::Matrix2cd::Identity());
  } else {
    op = Eigen::kroneckerProduct(Eigen::Matrix2cd::Identity(), m);
  }
  Eigen::MatrixXcd out = op * rho4.mat() * op.adjoint();
  const double tr = out.trace().real();
  if (tr <= 0.0) {
    throw std::runtime_error("apply_subsystem_operator: operator annihilates the state");
  }
  return DensityMatrix(out / tr);
}

Eigen::Matrix2cd partial_trace(const DensityMatrix& rho4, int keep_subsystem) {
  if (rho4.dim() != 4) {
    throw std::invalid_argument("partial_trace: need a 4x4 state");
  }
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  const auto& m = rho4.mat();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        if (keep_subsystem == 0) {
          out(i, j) += m(2 * i + k, 2 * j + k);
        } else {
          out(i, j) += m(2 * k + i, 2 * k + j);
        }
      }
    }
  }
  return out;
}

std::string basis_name(PauliBasis b) {
  switch (b) {
    case PauliBasis::XX: return "xx";
    case PauliBasis::YY: return "yy";
    case PauliBasis::ZZ: return "zz";
  }
  throw std::logic_error("unknown basis");
}

double pauli_coefficient(const PauliBasisCounts& counts) {
  const std::uint64_t total = counts.total();
  if (total == 0) {
    throw std::invalid_argument("pauli_coefficient: zero total count");
  }
  const double num = static_cast<double>(counts.n_pp) + static_cast<double>(counts.n_mm) -
                     static_cast<double>(counts.n_pm) - static_cast<double>(counts.n_mp);
  return num / static_cast<double>(total);
}

BellFidelityEstimate bell_fidelity(double rho_xx, double rho_yy, double rho_zz) {
  const double raw = (1.0 + rho_xx + rho_yy - rho_zz) / 4.0;
  BellFidelityEstimate est;
  est.value = std::clamp(raw, 0.0, 1.0);
  est.clamped = (raw != est.value);
  return est;
}

std::array<double, 4> coincidence_probabilities(const DensityMatrix& rho4, PauliBasis basis) {
  if (rho4.dim() != 4) {
    throw std::invalid_argument("coincidence_probabilities: need a 4x4 state");
  }
  const Eigen::Matrix2cd sigma = pauli(basis_pauli(basis));
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd proj_p = (id + sigma) / 2.0;
  const Eigen::Matrix2cd proj_m = (id - sigma) / 2.0;

  auto prob = [&](const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd joint = Eigen::kroneckerProduct(a, b);
    return (joint * rho4.mat()).trace().real();
  };

  std::array<double, 4> p = {prob(proj_p, proj_p), prob(proj_p, proj_m), prob(proj_m, proj_p),
                             prob(proj_m, proj_m)};
  for (double& x : p) x = std::max(x, 0.0);
  const double s = p[0] + p[1] + p[2] + p[3];
  for (double& x : p) x /= s;
  return p;
}

PauliBasisCounts sample_coincidences(const DensityMatrix& rho4, PauliBasis basis,
                                     std::uint64_t shots, Rng& rng) {
  if (shots == 0) {
    throw std::invalid_argument("sample_coincidences: shots must be >= 1");
  }
  const auto p = coincidence_probabilities(rho4, basis);
  const double c1 = p[0];
  const double c2 = c1 + p[1];
  const double c3 = c2 + p[2];

  PauliBasisCounts counts;
  counts.basis = basis;
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform();
    if (u < c1) {
      ++counts.n_pp;
    } else if (u < c2) {
      ++counts.n_pm;
    } else if (u < c3) {
      ++counts.n_mp;
    } else {
      ++counts.n_mm;
    }
  }
  return counts;
}

}  // namespace raqmsim
