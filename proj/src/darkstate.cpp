#include "slowlight/darkstate.hpp"

#include "slowlight/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

namespace slowlight {

namespace {

void require_counts(std::int64_t n_atoms, std::int64_t m_pol)
{
    if (n_atoms < 0 || m_pol < 0)
        throw Error(ErrorKind::invalid_argument,
                    "negative occupation (N=" + std::to_string(n_atoms) +
                        ", M=" + std::to_string(m_pol) + ")");
}

void require_densities(double p_s, double p_q, double a)
{
    if (!(p_s >= 0.0) || !std::isfinite(p_s))
        throw Error(ErrorKind::invalid_argument, "P_S must be finite and >= 0");
    if (!(p_q > 0.0) || !std::isfinite(p_q))
        throw Error(ErrorKind::invalid_argument, "P_Q must be finite and > 0");
    if (!(a >= 0.0))
        throw Error(ErrorKind::invalid_argument, "saturation density must be >= 0");
}

} // namespace

double log_norm_a(std::int64_t n_atoms, std::int64_t m_pol, double xi)
{
    require_counts(n_atoms, m_pol);
    if (!(xi >= 0.0) || !std::isfinite(xi))
        throw Error(ErrorKind::invalid_argument, "xi must be finite and >= 0");
    if (xi == 0.0 || n_atoms == 0 || m_pol == 0)
        return 0.0;

    const std::int64_t m_max = std::min(n_atoms, m_pol);
    const double log_xi = std::log(xi);
    const double base = std::lgamma(n_atoms + 1.0) + std::lgamma(m_pol + 1.0);

    // streaming log-sum-exp: sum = exp(shift) * acc
    double shift = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::int64_t m = 0; m <= m_max; ++m) {
        const double log_term = base - std::lgamma(n_atoms - m + 1.0) -
                                std::lgamma(m_pol - m + 1.0) - std::lgamma(m + 1.0) +
                                static_cast<double>(m) * log_xi;
        assert(std::isfinite(log_term) && "A(N,M) summands are strictly positive");
        if (log_term > shift) {
            acc = acc * std::exp(shift - log_term) + 1.0;
            shift = log_term;
        } else {
            acc += std::exp(log_term - shift);
        }
    }
    return shift + std::log(acc);
}

DarkStateCoeffs dark_state_coeffs(std::int64_t n_atoms, std::int64_t m_pol, double xi)
{
    return DarkStateCoeffs{n_atoms, m_pol, xi, log_norm_a(n_atoms, m_pol, xi)};
}

double y_exact(std::int64_t n_atoms, std::int64_t m_pol, double c)
{
    if (n_atoms < 1 || m_pol < 1)
        throw Error(ErrorKind::invalid_argument, "y_exact needs N >= 1 and M_D >= 1");
    if (!(c >= 0.0) || !std::isfinite(c))
        throw Error(ErrorKind::invalid_argument, "c must be finite and >= 0");

    double n;
    std::int64_t m;
    double y;
    if (m_pol <= n_atoms) {
        n = static_cast<double>(n_atoms - m_pol + 1);
        m = 1;
        y = c / (n + c);
    } else {
        n = 0.0;
        m = m_pol - n_atoms;
        y = 1.0;
    }
    while (m < m_pol) {
        n += 1.0;
        ++m;
        const double carried = static_cast<double>(m - 1) * y;
        y = (c + carried) / (n + c + carried);
    }
    return y;
}

double j_of(double p_s, double p_q, double a)
{
    require_densities(p_s, p_q, a);
    const double b = p_s - p_q - a;
    const double root = std::sqrt(0.25 * b * b + a * p_s);
    if (b >= 0.0)
        return 0.5 * b + root;
    // b/2 + root = a P_S / (root - b/2), no cancellation for b < 0
    return a * p_s / (root - 0.5 * b);
}

double j_of(const DensityPair& d, const PhysicalParams& p)
{
    return j_of(d.p_s, d.p_q, p.saturation_density());
}

double ps_of_j(double j, double p_q, double a)
{
    if (!(j >= 0.0))
        throw Error(ErrorKind::invalid_argument, "J must be >= 0");
    if (j == 0.0)
        return 0.0;
    return j + p_q * j / (a + j);
}

double k_limit_threshold(double p_q)
{
    return p_q * 1e-12;
}

double k_of(double p_s, double p_q, double a)
{
    require_densities(p_s, p_q, a);
    if (p_s < k_limit_threshold(p_q))
        return a / (p_q + a);
    const double b = p_s - p_q - a;
    const double root = std::sqrt(0.25 * b * b + a * p_s);
    if (b >= 0.0)
        return (0.5 * b + root) / p_s;
    return a / (root - 0.5 * b);
}

double k_of(const DensityPair& d, const PhysicalParams& p)
{
    return k_of(d.p_s, d.p_q, p.saturation_density());
}

double dk_error(std::int64_t n_atoms, std::int64_t m_pol, double c)
{
    const double y = y_exact(n_atoms, m_pol, c);
    // K((M-1)/L, N/L) with a = c/L; the common 1/L drops out of J/P_S.
    const double k = k_of(static_cast<double>(m_pol - 1), static_cast<double>(n_atoms), c);
    return y - k;
}

double dk_error(std::int64_t n_atoms, std::int64_t m_pol, const PhysicalParams& p)
{
    if (p.kappa() == 0.0)
        throw Error(ErrorKind::coupling_off, "D_K needs kappa > 0");
    const double c = p.saturation_density() * p.length();
    return dk_error(n_atoms, m_pol, c);
}

std::vector<DkPoint> dk_curve(std::int64_t n_atoms, double c, std::int64_t m_max)
{
    if (m_max < 1)
        throw Error(ErrorKind::invalid_argument, "m_max must be >= 1");
    std::vector<DkPoint> out;
    out.reserve(static_cast<std::size_t>(m_max));
    const double n = static_cast<double>(n_atoms);
    for (std::int64_t m = 1; m <= m_max; ++m) {
        const double y = y_exact(n_atoms, m, c);
        const double k = k_of(static_cast<double>(m - 1), n, c);
        out.push_back(DkPoint{m, static_cast<double>(m - 1) / n, y, k, y - k});
    }
    return out;
}

} // namespace slowlight
