#pragma once

#include <optional>

namespace slowlight {

// Units throughout: lengths in um, times in us, frequencies in 1/us.

/// Experimental constants of a 1D slow-light medium.
///
/// Only constructible through Builder, which validates every field, so any
/// PhysicalParams value in circulation is physically admissible.
class PhysicalParams {
public:
    class Builder;

    double u() const noexcept { return u_; }                  ///< probe phase velocity [um/us]
    double kappa() const noexcept { return kappa_; }          ///< atom-field coupling [us^-1 um^1/2]
    double omega_c() const noexcept { return omega_c_; }      ///< coupling Rabi frequency [1/us]
    double n_1d() const noexcept { return n_1d_; }            ///< linear atom density [1/um]
    double length() const noexcept { return length_; }        ///< medium length [um]
    double delta() const noexcept { return delta_; }          ///< one-photon detuning [1/us]
    double gamma() const noexcept { return gamma_; }          ///< half radiative decay rate [1/us]
    double mode_area() const noexcept { return mode_area_; }  ///< effective mode area [um^2]
    double sigma0() const noexcept { return sigma0_; }        ///< resonant cross-section [um^2]

    /// kappa * sqrt(n_1d), the collective coupling [1/us].
    double collective_coupling() const noexcept;
    /// Omega_C^2 / kappa^2 [1/um]; infinite when kappa == 0.
    double saturation_density() const noexcept;
    /// Number of atoms N = n_1d * L.
    double atom_number() const noexcept { return n_1d_ * length_; }

    Builder to_builder() const;

private:
    PhysicalParams() = default;

    double u_ = 0.0;
    double kappa_ = 0.0;
    double omega_c_ = 0.0;
    double n_1d_ = 0.0;
    double length_ = 0.0;
    double delta_ = 0.0;
    double gamma_ = 0.0;
    double mode_area_ = 0.0;
    double sigma0_ = 0.0;
};

class PhysicalParams::Builder {
public:
    Builder& u(double v) { u_ = v; return *this; }
    Builder& kappa(double v) { kappa_ = v; return *this; }
    Builder& omega_c(double v) { omega_c_ = v; return *this; }
    Builder& n_1d(double v) { n_1d_ = v; return *this; }
    Builder& length(double v) { length_ = v; return *this; }
    Builder& delta(double v) { delta_ = v; return *this; }
    Builder& gamma(double v) { gamma_ = v; return *this; }
    Builder& mode_area(double v) { mode_area_ = v; return *this; }
    Builder& sigma0(double v) { sigma0_ = v; return *this; }

    /// Derive kappa from the transition dipole (SI, C*m) and carrier angular
    /// frequency (SI, rad/s) at build time, using the configured mode area.
    Builder& dipole(double d_si, double omega0_si) {
        dipole_ = Dipole{d_si, omega0_si};
        return *this;
    }

    /// Throws Error(invalid_argument / missing_parameter) on any bad field.
    PhysicalParams build() const;

private:
    struct Dipole {
        double d;
        double omega0;
    };

    std::optional<double> u_, kappa_, omega_c_, n_1d_, length_, mode_area_;
    double delta_ = 0.0;
    double gamma_ = 0.0;
    double sigma0_ = 0.0;
    std::optional<Dipole> dipole_;
};

/// rho = Omega_C^2 / (kappa^2 n_1d). Throws coupling_off when kappa == 0.
double derived_rho(const PhysicalParams& p);

/// Beer's length zeta = A / (n_1d sigma0) [um]. Throws no_absorption_data when sigma0 == 0.
double beer_length(const PhysicalParams& p);

/// Optical density s = L n_1d sigma0 / A. Throws no_absorption_data when sigma0 == 0.
double optical_density(const PhysicalParams& p);

enum class WindowRegime { dense, far_detuned };

/// Width of the slow-light window [1/us].
///   dense:       Omega_C^2 / (gamma sqrt(s)),  needs s > 1 and gamma > 0
///   far_detuned: (kappa^2 n_1d + Omega_C^2) / |Delta|,  needs Delta != 0
double spectral_window(const PhysicalParams& p, WindowRegime regime);

/// kappa = d sqrt(omega0 / (2 hbar eps0 A)) converted to us^-1 um^1/2.
/// d in C*m, omega0 in rad/s, mode area in um^2.
double coupling_from_dipole(double d_si, double omega0_si, double mode_area_um2);

} // namespace slowlight
