#include "slowlight/params.hpp"

#include "slowlight/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace slowlight {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::coupling_off: return "coupling-off";
    case ErrorKind::no_absorption_data: return "no-absorption-data";
    case ErrorKind::missing_parameter: return "missing-parameter";
    case ErrorKind::oracle_scale_only: return "oracle-scale-only";
    case ErrorKind::adiabatic_elimination_invalid: return "adiabatic-elimination-invalid";
    case ErrorKind::branch_tracking: return "branch-tracking";
    case ErrorKind::wave_breaking: return "wave-breaking";
    case ErrorKind::stability: return "stability";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

namespace {

constexpr double hbar_si = 1.054571817e-34;
constexpr double eps0_si = 8.8541878128e-12;

double require(const std::optional<double>& v, const char* name)
{
    if (!v)
        throw Error(ErrorKind::missing_parameter, std::string("field '") + name + "' not set");
    if (!std::isfinite(*v))
        throw Error(ErrorKind::invalid_argument, std::string("field '") + name + "' is not finite");
    return *v;
}

void check(bool ok, const char* name, const char* rule)
{
    if (!ok)
        throw Error(ErrorKind::invalid_argument, std::string(name) + " must be " + rule);
}

} // namespace

double PhysicalParams::collective_coupling() const noexcept
{
    return kappa_ * std::sqrt(n_1d_);
}

double PhysicalParams::saturation_density() const noexcept
{
    if (kappa_ == 0.0)
        return std::numeric_limits<double>::infinity();
    return omega_c_ * omega_c_ / (kappa_ * kappa_);
}

PhysicalParams::Builder PhysicalParams::to_builder() const
{
    Builder b;
    b.u(u_).kappa(kappa_).omega_c(omega_c_).n_1d(n_1d_).length(length_);
    b.delta(delta_).gamma(gamma_).mode_area(mode_area_).sigma0(sigma0_);
    return b;
}

PhysicalParams PhysicalParams::Builder::build() const
{
    PhysicalParams p;
    p.u_ = require(u_, "u");
    p.omega_c_ = require(omega_c_, "omega_c");
    p.n_1d_ = require(n_1d_, "n_1d");
    p.length_ = require(length_, "length");
    p.mode_area_ = require(mode_area_, "mode_area");
    p.delta_ = delta_;
    p.gamma_ = gamma_;
    p.sigma0_ = sigma0_;

    check(p.u_ > 0.0, "u", "> 0");
    check(p.omega_c_ > 0.0, "omega_c", "> 0");
    check(p.n_1d_ > 0.0, "n_1d", "> 0");
    check(p.length_ > 0.0, "length", "> 0");
    check(p.mode_area_ > 0.0, "mode_area", "> 0");
    check(std::isfinite(p.delta_), "delta", "finite");
    check(std::isfinite(p.gamma_) && p.gamma_ >= 0.0, "gamma", "finite and >= 0");
    check(std::isfinite(p.sigma0_) && p.sigma0_ >= 0.0, "sigma0", ">= 0");

    if (dipole_) {
        if (kappa_)
            throw Error(ErrorKind::invalid_argument, "kappa and dipole are mutually exclusive");
        check(dipole_->d >= 0.0 && std::isfinite(dipole_->d), "dipole.d", "finite and >= 0");
        check(dipole_->omega0 > 0.0 && std::isfinite(dipole_->omega0), "dipole.omega0", "> 0");
        p.kappa_ = coupling_from_dipole(dipole_->d, dipole_->omega0, p.mode_area_);
    } else {
        p.kappa_ = require(kappa_, "kappa");
    }
    check(p.kappa_ >= 0.0, "kappa", ">= 0");
    return p;
}

double derived_rho(const PhysicalParams& p)
{
    if (p.kappa() == 0.0)
        throw Error(ErrorKind::coupling_off, "rho is undefined for kappa = 0");
    const double g = p.collective_coupling();
    return (p.omega_c() / g) * (p.omega_c() / g);
}

double beer_length(const PhysicalParams& p)
{
    if (p.sigma0() == 0.0)
        throw Error(ErrorKind::no_absorption_data, "sigma0 = 0 gives no Beer length");
    return p.mode_area() / (p.n_1d() * p.sigma0());
}

double optical_density(const PhysicalParams& p)
{
    if (p.sigma0() == 0.0)
        throw Error(ErrorKind::no_absorption_data, "sigma0 = 0 gives no optical density");
    return p.length() * p.n_1d() * p.sigma0() / p.mode_area();
}

double spectral_window(const PhysicalParams& p, WindowRegime regime)
{
    const double oc2 = p.omega_c() * p.omega_c();
    switch (regime) {
    case WindowRegime::dense: {
        if (p.gamma() <= 0.0)
            throw Error(ErrorKind::missing_parameter, "dense window needs gamma > 0");
        if (p.sigma0() <= 0.0)
            throw Error(ErrorKind::missing_parameter, "dense window needs sigma0 > 0");
        const double s = optical_density(p);
        if (!(s > 1.0))
            throw Error(ErrorKind::missing_parameter,
                        "dense window needs optical density s > 1 (got " + std::to_string(s) + ")");
        return oc2 / (p.gamma() * std::sqrt(s));
    }
    case WindowRegime::far_detuned: {
        if (p.delta() == 0.0)
            throw Error(ErrorKind::missing_parameter, "far-detuned window needs delta != 0");
        const double g = p.collective_coupling();
        return (g * g + oc2) / std::abs(p.delta());
    }
    }
    throw Error(ErrorKind::invalid_argument, "unknown window regime");
}

double coupling_from_dipole(double d_si, double omega0_si, double mode_area_um2)
{
    const double area_si = mode_area_um2 * 1e-12;
    const double kappa_si = d_si * std::sqrt(omega0_si / (2.0 * hbar_si * eps0_si * area_si));
    // SI units are m^1/2 s^-1; m^1/2 = 1e3 um^1/2 and s^-1 = 1e-6 us^-1.
    return kappa_si * 1e-3;
}

} // namespace slowlight
