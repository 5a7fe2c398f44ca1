#pragma once

#include "slowlight/params.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace slowlight {

using cplx = std::complex<double>;

/// Uniform cell-centred grid on [z0, z1].
struct Grid1D {
    double z0 = 0.0;
    double z1 = 1.0;
    int nz = 16;

    /// Throws invalid_argument unless z1 > z0 and nz >= 16.
    static Grid1D make(double z0, double z1, int nz);

    double dz() const noexcept { return (z1 - z0) / nz; }
    double z(int i) const noexcept { return z0 + (i + 0.5) * dz(); }
};

/// Envelope Psi with |Psi|^2 the polariton line density [1/um] and
/// integral |Psi|^2 dz = m_mean. m_mean = infinity selects the classical
/// (coherent) limit, where P_S = |Psi|^2.
struct PulseState {
    Grid1D grid;
    std::vector<cplx> psi;
    double m_mean = 1.0;
    double t = 0.0;

    double norm() const;  ///< sum |psi|^2 dz
};

/// (M - 1) / M, clamped at 0; 1 for the classical limit.
double fock_factor(double m_mean);

/// Polariton density entering v_gr: P_S = fock_factor(m_mean) |Psi|^2.
double polariton_density(double psi_abs2, double m_mean);

struct CharacteristicFan {
    std::vector<double> z_start;
    std::vector<cplx> value;
    std::vector<double> speed;  ///< z(t) = z_start + speed (t - t0)

    double position(std::size_t i, double dt) const { return z_start[i] + speed[i] * dt; }
};

struct CharacteristicsResult {
    PulseState state;
    CharacteristicFan fan;
    std::optional<double> break_time;  ///< absolute time of the first crossing
};

/// Lossless transport d_t Psi + v_gr(P_S) d_z Psi = 0 by characteristics on
/// an unbounded line. Reconstruction stops at the break time; strict mode
/// throws wave_breaking when the break happens before t_final.
CharacteristicsResult solve_characteristics(const PulseState& init, const PhysicalParams& p, double t_final,
                                            bool strict = false);

/// min over z0 of -1/(dv/dz0) for the initial profile, from the analytic
/// slope of v_gr. nullopt when v_gr is nowhere decreasing.
std::optional<double> analytic_break_time(const PulseState& init, const PhysicalParams& p);

/// Reduced mean-field transport of the probe amplitude E, with |E|^2 the
/// photon line density J and speed vgr_kuang(|E|^2).
struct FieldResult {
    Grid1D grid;
    std::vector<cplx> e_field;
    CharacteristicFan fan;
    std::optional<double> break_time;
    double t = 0.0;
};

FieldResult solve_reduced_meanfield(const Grid1D& grid, const std::vector<cplx>& e_field, const PhysicalParams& p,
                                    double t_final, bool strict = false);

enum class Boundary { open, periodic };
enum class DiffusionVelocity { local, weak };

struct AdvectionDiffusionOptions {
    Boundary boundary = Boundary::open;
    DiffusionVelocity diffusion_velocity = DiffusionVelocity::local;
    std::function<cplx(double)> inflow;  ///< Psi(z0, t) for open boundaries; zero when empty
    double record_every = 0.0;           ///< flux sampling interval [us]; 0 = every step
};

struct FluxRecord {
    std::vector<double> t;
    std::vector<double> entrance;  ///< photon flux at z0 [1/us]
    std::vector<double> exit;      ///< photon flux at z1 [1/us]
};

struct AdvectionDiffusionResult {
    PulseState state;
    FluxRecord flux;
    std::vector<double> norm_history;  ///< integral |Psi|^2 dz after every step
    double clipped_mass = 0.0;
    int steps = 0;
};

/// d_t Psi + v_gr d_z Psi = d_z (D d_z Psi), D = v^3 gamma^2 / (2 zeta Omega_C^4).
/// Conservative upwind for P_S, transported phase, explicit diffusion, Strang split.
AdvectionDiffusionResult solve_advection_diffusion(const PulseState& init, const PhysicalParams& p, double t_final,
                                                   const AdvectionDiffusionOptions& opts = {});

/// Photon flux u |Psi|^2 K(P_S, n_1d) at z_probe [1/us].
double photon_flux(const PulseState& s, const PhysicalParams& p, double z_probe);

/// Flux through a cross-section for polariton density P_S, i.e. u J(P_S) / f.
double polariton_flux(double psi_abs2, double m_mean, const PhysicalParams& p);

/// Inverse of polariton_flux: |Psi|^2 carrying the photon flux q.
double density_from_flux(double q, double m_mean, const PhysicalParams& p);

// Open-medium transit in retarded time: the entrance flux series Q(0, t) is
// marched through z = 0..L.

enum class TransitMode { lossless, absorbing };

struct TransitOptions {
    TransitMode mode = TransitMode::absorbing;
    DiffusionVelocity diffusion_velocity = DiffusionVelocity::local;
    double courant = 0.9;
    bool strict = false;
    std::vector<double> snapshot_times;  ///< times at which |Psi|^2(z) is recorded
};

struct TransitSnapshot {
    double t = 0.0;
    std::vector<double> z;
    std::vector<double> density;  ///< |Psi|^2 [1/um]
    std::vector<double> vgr;
};

struct TransitResult {
    std::vector<double> t;
    std::vector<double> flux_in;
    std::vector<double> flux_out;  ///< NaN past the break
    double delay = 0.0;            ///< peak arrival difference [us]
    double transmitted_fraction = 0.0;
    double fwhm_in = 0.0;
    double fwhm_out = 0.0;
    std::optional<double> break_time;      ///< exit time of the first crossing
    std::optional<double> break_position;  ///< z of the first crossing
    int z_steps = 0;
    std::vector<TransitSnapshot> snapshots;
};

/// t must be uniform and increasing; flux_in is the entrance photon flux.
TransitResult solve_transit(const std::vector<double>& t, const std::vector<double>& flux_in, double m_mean,
                            const PhysicalParams& p, const TransitOptions& opts = {});

/// Entrance photon flux of a Gaussian pulse whose polariton density peaks at
/// peak_density with 1/e intensity half-width `width` centred at t_center.
std::vector<double> gaussian_entrance_flux(const std::vector<double>& t, double peak_density, double width,
                                           double t_center, double m_mean, const PhysicalParams& p);

/// Peak position of a sampled series with parabolic refinement.
double peak_time(const std::vector<double>& t, const std::vector<double>& y);

/// Full width at half maximum with linear interpolation of the crossings.
double fwhm(const std::vector<double>& t, const std::vector<double>& y);

// Full four-field mean-field model.

struct MeanFieldState {
    Grid1D grid;
    std::vector<cplx> e_field;
    std::vector<cplx> psi1;
    std::vector<cplx> psi_e;
    std::vector<cplx> psi2;
    double t = 0.0;
};

/// Adiabatic dark initial data for a given probe field:
/// |psi1|^2 = n_1d / (1 + kappa^2 |E|^2 / Omega_C^2), psi2 = -kappa E psi1 / Omega_C, psi_e = 0.
MeanFieldState dark_initial_state(const Grid1D& grid, const std::vector<cplx>& e_field, const PhysicalParams& p);

struct MeanFieldDiagnostics {
    double max_density_drift = 0.0;   ///< max_z | |psi1|^2+|psi_e|^2+|psi2|^2 - initial | / n_1d
    double max_adiabatic_residual = 0.0;  ///< max_z | |psi1|^2 (1 + kappa^2|E|^2/Omega_C^2) - n_1d |
    double max_excited_fraction = 0.0;    ///< max |psi_e|^2 / max |psi2|^2 over the run
    int steps = 0;
    int substeps = 1;
};

struct MeanFieldResult {
    MeanFieldState state;
    MeanFieldDiagnostics diagnostics;
};

/// dE/dt = -u dE/dz + i kappa psi1^* psi_e, atoms advanced by the exact
/// exponential of their local 3x3 generator. Open inflow (E = 0) at z0.
MeanFieldResult integrate_mean_field(const MeanFieldState& init, const PhysicalParams& p, double t_final);

/// Centroid of |f|^2 on the grid.
double centroid(const Grid1D& grid, const std::vector<cplx>& f);

} // namespace slowlight
