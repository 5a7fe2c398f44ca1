#pragma once

#include "slowlight/params.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace slowlight {

/// |DS; N, M_D> in the single-zero-mode truncation, stored on the basis
/// |N-m>_g1 |m>_g2 |M_D-m>_phot, m = 0..min(N, M_D).
struct FockSector {
    std::int64_t n_atoms = 0;
    std::int64_t m_pol = 0;
    double xi = 0.0;
    std::vector<double> amps;
};

/// Largest min(N, M_D) accepted by build_dark_state.
inline constexpr std::int64_t fock_oracle_cap = 10000;

/// Throws oracle_scale_only above fock_oracle_cap.
FockSector build_dark_state(std::int64_t n_atoms, std::int64_t m_pol, double xi);

enum class Mode : int { g1 = 0, g2 = 1, excited = 2, photon = 3 };

/// Occupations of the four zero modes.
struct Occupation {
    int n1 = 0;
    int n2 = 0;
    int ne = 0;
    int nph = 0;

    int atoms() const noexcept { return n1 + n2 + ne; }
    int excitations() const noexcept { return n2 + ne + nph; }
    int operator[](Mode mode) const noexcept;
    friend bool operator==(const Occupation&, const Occupation&) = default;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Truncated Fock space of the four zero modes: every occupation with atom
/// number in [n_lo, n_hi], excitation number in [m_lo, m_hi] and at most
/// `excited_cap` excited atoms. Operators are built on demand as sparse
/// matrices; matrix elements leading out of the space are dropped.
class ZeroModeSpace {
public:
    ZeroModeSpace(int n_lo, int n_hi, int m_lo, int m_hi, int excited_cap);

    std::size_t size() const noexcept { return states_.size(); }
    const Occupation& state(std::size_t i) const { return states_[i]; }
    std::optional<std::size_t> index_of(const Occupation& occ) const;

    SparseMatrix annihilate(Mode mode) const;
    SparseMatrix number(Mode mode) const;
    SparseMatrix atom_number() const;
    SparseMatrix excitation_number() const;

    /// Zero-momentum restriction of H / hbar:
    ///   -Delta e^+e - (kappa/sqrt(L)) (a^+ b1^+ e + e^+ b1 a) - Omega_C (b2^+ e + e^+ b2).
    SparseMatrix hamiltonian(const PhysicalParams& p) const;

    /// Place a dark-state sector into this space. Throws if a basis state is missing.
    Eigen::VectorXd embed(const FockSector& s) const;

private:
    std::vector<Occupation> states_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
    static std::uint64_t key(const Occupation& occ) noexcept;
};

struct DarkResidual {
    double r_e = 0.0;   ///< || psi_e |DS> ||
    double r_ds = 0.0;  ///< || (kappa a0 b1 / sqrt(L) + Omega_C b2) |DS> ||
};

DarkResidual dark_condition_residual(const FockSector& s, const PhysicalParams& p);

struct A0Action {
    double ratio = 0.0;                ///< (<DS;N,M-1| a0 |DS;N,M> / sqrt(M))^2, equals Y(N, M)
    double orthogonal_residual = 0.0;  ///< part of a0|DS> not parallel to |DS;N,M-1>
};

A0Action a0_action_ratio(std::int64_t n_atoms, std::int64_t m_pol, double xi);

/// || H |DS; N, M_D> || with H the zero-mode Hamiltonian built from p.
double zero_energy_check(std::int64_t n_atoms, std::int64_t m_pol, double xi, const PhysicalParams& p);

struct ConservationNorms {
    double commutator_n = 0.0;  ///< || [H, N] ||_F
    double commutator_m = 0.0;  ///< || [H, M] ||_F
    std::size_t dimension = 0;
};

/// Commutators of the truncated H with the atom and excitation number
/// operators on every sector with N <= n_max and M <= m_max.
ConservationNorms conservation_check(int n_max, int m_max, const PhysicalParams& p);

/// Parameters whose zero-mode coupling ratio kappa^2 / (Omega_C^2 L) equals xi
/// (kappa = L = n_1d = 1, Omega_C = 1/sqrt(xi)); used by the oracle reports.
PhysicalParams params_for_xi(double xi, double delta = 0.0);

} // namespace slowlight
