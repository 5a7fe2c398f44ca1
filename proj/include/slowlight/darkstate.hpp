#pragma once

#include "slowlight/params.hpp"

#include <cstdint>
#include <vector>

namespace slowlight {

/// Normalization data of the zero-mode dark state |DS; N, M_D>.
struct DarkStateCoeffs {
    std::int64_t n_atoms = 0;
    std::int64_t m_pol = 0;
    double xi = 0.0;        ///< kappa^2 / (Omega_C^2 L)
    double log_norm = 0.0;  ///< ln A(N, M_D)
};

/// Polariton / atom linear densities [1/um]. Requires p_s >= 0, p_q > 0.
struct DensityPair {
    double p_s = 0.0;
    double p_q = 0.0;
};

/// ln A(N, M) with A = sum_{m=0}^{min(N,M)} N! M! / ((N-m)! (M-m)! m!) xi^m.
///
/// Summed in the log domain with a running maximum shift; every term is
/// positive, so the result is finite for any N, M, xi >= 0.
double log_norm_a(std::int64_t n_atoms, std::int64_t m_pol, double xi);

DarkStateCoeffs dark_state_coeffs(std::int64_t n_atoms, std::int64_t m_pol, double xi);

/// Exact ratio Y(N, M) = A(N, M-1) / A(N, M) from the diagonal recursion
///   Y(N, M) = (c + (M-1) Y(N-1, M-1)) / (N + c + (M-1) Y(N-1, M-1)),
/// c = Omega_C^2 L / kappa^2. Seeded at Y(N-M+1, 1) = c / (N-M+1+c) when
/// M <= N, and at Y(0, M-N) = 1 otherwise (A(0, M) = 1). O(M) work.
double y_exact(std::int64_t n_atoms, std::int64_t m_pol, double c);

/// Photon density J(P_S, P_Q) [1/um] for saturation density a = Omega_C^2/kappa^2.
/// Uses the conjugate form when P_S - P_Q - a < 0 to avoid cancellation.
double j_of(double p_s, double p_q, double a);
double j_of(const DensityPair& d, const PhysicalParams& p);

/// Inverse of j_of at fixed P_Q: P_S = J + P_Q J / (a + J).
double ps_of_j(double j, double p_q, double a);

/// Threshold below which k_of switches to its P_S -> 0 limit a / (P_Q + a).
double k_limit_threshold(double p_q);

/// K = J / P_S in (0, 1].
double k_of(double p_s, double p_q, double a);
double k_of(const DensityPair& d, const PhysicalParams& p);

/// D_K = Y(N, M) - K((M-1)/L, N/L), written in the scale-free form with c = Omega_C^2 L / kappa^2.
double dk_error(std::int64_t n_atoms, std::int64_t m_pol, double c);
double dk_error(std::int64_t n_atoms, std::int64_t m_pol, const PhysicalParams& p);

struct DkPoint {
    std::int64_t m_pol;
    double m_ratio;  ///< (M_D - 1) / N
    double y_exact;
    double k_approx;
    double d_k;
};

/// D_K over M_D = 1..m_max for fixed N and c.
std::vector<DkPoint> dk_curve(std::int64_t n_atoms, double c, std::int64_t m_max);

} // namespace slowlight
