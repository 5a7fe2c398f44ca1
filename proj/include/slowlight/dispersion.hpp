#pragma once

#include "slowlight/params.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace slowlight {

enum class BranchLabel { dark, bright, excited_like };

const char* to_string(BranchLabel label) noexcept;

struct Eigenpair {
    double omega = 0.0;        ///< eigenfrequency [1/us]
    Eigen::Vector3d vector;    ///< amplitudes on {photon, excited, spin}
    BranchLabel label = BranchLabel::dark;
};

/// 3x3 single-excitation block of H/hbar at wavenumber offset dk [1/um]:
///   [[u dk, -g, 0], [-g, -Delta, -Omega_C], [0, -Omega_C, 0]],  g = kappa sqrt(n_1d).
Eigen::Matrix3d single_excitation_matrix(double dk, const PhysicalParams& p);

/// Eigenpairs sorted by frequency. Labels follow adiabatic continuation from
/// dk = 0, where the dark state (Omega_C, 0, -g) has frequency exactly 0.
std::array<Eigenpair, 3> single_excitation_spectrum(double dk, const PhysicalParams& p);

/// Slope of the dark branch at dk = 0 by central differences with one
/// Richardson level; step h = 1e-6 Omega_C^2 / (u g).
double dark_branch_group_velocity(const PhysicalParams& p);

/// Intensity-dependent group velocity for polariton density P_S [1/um]:
///   v = (u/2) [1 + (x - 1 + rho) / sqrt((x - 1 + rho)^2 + 4 rho)],  x = P_S / n_1d.
double vgr_quantum(double p_s, const PhysicalParams& p);

/// Same velocity written through the probe Rabi frequency Omega_P^2 = kappa^2 J:
///   v = u (Omega_P^2 + Omega_C^2)^2 / [(Omega_P^2 + Omega_C^2)^2 + Omega_C^2 kappa^2 n_1d].
double vgr_kuang(double j, const PhysicalParams& p);

/// dv/dP_S of vgr_quantum, analytic.
double vgr_quantum_slope(double p_s, const PhysicalParams& p);

/// Mean-field photon density J -> polariton density P_S at P_Q = n_1d.
double polariton_density_from_photons(double j, const PhysicalParams& p);

struct TwoLevelModes {
    double omega_plus = 0.0;
    double omega_minus = 0.0;  ///< dark branch: omega_minus(0) = 0
    double theta = 0.0;        ///< mixing angle in (0, pi)
};

/// Far-detuned model with the excited state eliminated. Throws
/// adiabatic_elimination_invalid for Delta == 0.
TwoLevelModes adiabatic_two_level(double domega, const PhysicalParams& p);

/// The 2x2 matrix itself, on {|1> photon, |2> spin}.
Eigen::Matrix2d adiabatic_two_level_matrix(double domega, const PhysicalParams& p);

enum class BranchClass { slow, fast, mixed };

const char* to_string(BranchClass c) noexcept;

struct ClassifierThresholds {
    double velocity_ratio = 0.5;  ///< slow needs |d omega_minus / d domega| below this
    double photon_overlap = 0.9;  ///< and kappa -> 0 continuation overlapping |1> above this
};

struct BranchClassification {
    double domega = 0.0;
    double velocity_ratio = 0.0;
    double photon_overlap = 0.0;
    BranchClass cls = BranchClass::mixed;
};

std::vector<BranchClassification> dark_branch_classifier(const std::vector<double>& domega_grid,
                                                         const PhysicalParams& p,
                                                         const ClassifierThresholds& thresholds = {});

/// Eigenfrequency tables along a wavenumber grid.
struct DispersionBranch {
    std::vector<double> dk_grid;
    std::array<std::vector<double>, 3> omega;  ///< indexed by BranchLabel
    std::vector<double> theta;                 ///< empty unless Delta != 0
};

/// Tracks branches from dk = 0 outward by maximal eigenvector overlap.
/// The grid must be sorted; throws branch_tracking if an overlap drops below 0.7.
DispersionBranch dispersion_curve(const std::vector<double>& dk_grid, const PhysicalParams& p);

} // namespace slowlight
