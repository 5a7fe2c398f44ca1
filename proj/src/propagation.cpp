#include "slowlight/propagation.hpp"

#include "slowlight/darkstate.hpp"
#include "slowlight/dispersion.hpp"
#include "slowlight/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slowlight {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

void require_coupling(const PhysicalParams& p)
{
    if (p.kappa() == 0.0)
        throw Error(ErrorKind::coupling_off, "propagation needs kappa > 0");
}

double weak_velocity(const PhysicalParams& p)
{
    const double rho = derived_rho(p);
    return p.u() * rho / (1.0 + rho);
}

double velocity_of(double psi_abs2, double m_mean, const PhysicalParams& p)
{
    return vgr_quantum(polariton_density(psi_abs2, m_mean), p);
}

// first derivative on a uniform grid, one-sided at the ends
template <class T>
std::vector<T> gradient(const std::vector<T>& f, double h)
{
    const std::size_t n = f.size();
    std::vector<T> d(n, T{});
    if (n < 2)
        return d;
    d[0] = (f[1] - f[0]) / h;
    d[n - 1] = (f[n - 1] - f[n - 2]) / h;
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    return d;
}

template <class T>
T hermite(double x0, double x1, const T& f0, const T& f1, const T& d0, const T& d1, double x)
{
    const double h = x1 - x0;
    const double s = (x - x0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * f1 +
           (s3 - s2) * h * d1;
}

// Earliest crossing of adjacent straight characteristics x_i + c_i tau;
// returns tau (relative) or infinity.
double first_crossing(const std::vector<double>& x, const std::vector<double>& c, std::size_t* where = nullptr)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double closing = c[i] - c[i + 1];
        if (closing <= 0.0)
            continue;
        const double tau = (x[i + 1] - x[i]) / closing;
        if (tau < best) {
            best = tau;
            if (where)
                *where = i;
        }
    }
    return best;
}

// Values carried along characteristics launched from x with speeds c,
// reconstructed at sample points q after time tau.
template <class T>
std::vector<T> reconstruct(const std::vector<double>& x, const std::vector<T>& value, const std::vector<double>& c,
                           double h, double tau, const std::vector<double>& q)
{
    const std::size_t n = x.size();
    const auto dvalue = gradient(value, h);
    const auto dc = gradient(c, h);
    std::vector<double> pos(n);
    std::vector<T> slope(n);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = x[i] + c[i] * tau;
        slope[i] = dvalue[i] / (1.0 + tau * dc[i]);
    }
    std::vector<T> out(q.size(), T{});
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double z = q[k];
        if (z < pos.front() || z > pos.back())
            continue;
        auto it = std::upper_bound(pos.begin(), pos.end(), z);
        std::size_t j = (it == pos.begin()) ? 0 : static_cast<std::size_t>(it - pos.begin()) - 1;
        if (j + 1 >= n)
            j = n - 2;
        out[k] = hermite(pos[j], pos[j + 1], value[j], value[j + 1], slope[j], slope[j + 1], z);
    }
    return out;
}

struct GenericFan {
    CharacteristicFan fan;
    std::vector<cplx> values_at_end;
    std::optional<double> break_time;
    double t_end = 0.0;
};

GenericFan transport(const Grid1D& grid, const std::vector<cplx>& values, const std::vector<double>& speed, double t0,
                     double t_final, bool strict)
{
    if (!(t_final > t0))
        throw Error(ErrorKind::invalid_argument, "t_final must exceed the initial time");
    const int n = grid.nz;
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        z[static_cast<std::size_t>(i)] = grid.z(i);

    GenericFan out;
    out.fan.z_start = z;
    out.fan.value = values;
    out.fan.speed = speed;

    const double tau_break = first_crossing(z, speed);
    double tau = t_final - t0;
    if (tau_break < tau) {
        out.break_time = t0 + tau_break;
        if (strict)
            throw Error(ErrorKind::wave_breaking,
                        "characteristics cross at t = " + std::to_string(*out.break_time) + " us");
        tau = tau_break;
    } else if (std::isfinite(tau_break)) {
        out.break_time = t0 + tau_break;
    }
    out.t_end = t0 + tau;
    out.values_at_end = reconstruct(z, values, speed, grid.dz(), tau, z);
    return out;
}

void check_state(const PulseState& s)
{
    if (static_cast<int>(s.psi.size()) != s.grid.nz)
        throw Error(ErrorKind::invalid_argument, "psi size does not match the grid");
    if (!(s.m_mean > 0.0))
        throw Error(ErrorKind::invalid_argument, "m_mean must be > 0");
}

void check_normalized(const PulseState& s)
{
    if (std::isinf(s.m_mean))
        return;
    const double norm = s.norm();
    if (std::abs(norm - s.m_mean) > 1e-6 * s.m_mean)
        throw Error(ErrorKind::invalid_argument, "pulse norm " + std::to_string(norm) +
                                                     " differs from m_mean " + std::to_string(s.m_mean));
}

double absorption_beta(const PhysicalParams& p)
{
    if (p.gamma() == 0.0 || p.sigma0() == 0.0)
        return 0.0;
    const double oc2 = p.omega_c() * p.omega_c();
    return p.gamma() * p.gamma() / (2.0 * beer_length(p) * oc2 * oc2);
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y)
{
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
        if (std::isfinite(y[k]) && std::isfinite(y[k + 1]))
            acc += 0.5 * (y[k] + y[k + 1]) * (t[k + 1] - t[k]);
    return acc;
}

// (I - r L) x = b with L the Neumann second difference and r_k >= 0 per node
void implicit_diffuse(std::vector<double>& x, const std::vector<double>& r)
{
    const std::size_t n = x.size();
    if (n < 2)
        return;
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double left = (k > 0) ? r[k] : 0.0;
        const double right = (k + 1 < n) ? r[k] : 0.0;
        lower[k] = -left;
        upper[k] = -right;
        diag[k] = 1.0 + left + right;
    }
    // Thomas
    for (std::size_t k = 1; k < n; ++k) {
        const double w = lower[k] / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        x[k] -= w * x[k - 1];
    }
    x[n - 1] /= diag[n - 1];
    for (std::size_t k = n - 1; k-- > 0;)
        x[k] = (x[k] - upper[k] * x[k + 1]) / diag[k];
}

} // namespace

Grid1D Grid1D::make(double z0, double z1, int nz)
{
    if (!(z1 > z0))
        throw Error(ErrorKind::invalid_argument, "grid needs z1 > z0");
    if (nz < 16)
        throw Error(ErrorKind::invalid_argument, "grid needs nz >= 16");
    return Grid1D{z0, z1, nz};
}

double PulseState::norm() const
{
    double acc = 0.0;
    for (const auto& v : psi)
        acc += std::norm(v);
    return acc * grid.dz();
}

double fock_factor(double m_mean)
{
    if (std::isinf(m_mean))
        return 1.0;
    if (!(m_mean > 0.0))
        throw Error(ErrorKind::invalid_argument, "m_mean must be > 0");
    return std::max(m_mean - 1.0, 0.0) / m_mean;
}

double polariton_density(double psi_abs2, double m_mean)
{
    return fock_factor(m_mean) * psi_abs2;
}

CharacteristicsResult solve_characteristics(const PulseState& init, const PhysicalParams& p, double t_final,
                                            bool strict)
{
    require_coupling(p);
    check_state(init);
    check_normalized(init);
    std::vector<double> speed(init.psi.size());
    for (std::size_t i = 0; i < speed.size(); ++i)
        speed[i] = velocity_of(std::norm(init.psi[i]), init.m_mean, p);

    GenericFan g = transport(init.grid, init.psi, speed, init.t, t_final, strict);
    CharacteristicsResult out;
    out.state = PulseState{init.grid, std::move(g.values_at_end), init.m_mean, g.t_end};
    out.fan = std::move(g.fan);
    out.break_time = g.break_time;
    return out;
}

std::optional<double> analytic_break_time(const PulseState& init, const PhysicalParams& p)
{
    require_coupling(p);
    check_state(init);
    const double f = fock_factor(init.m_mean);
    std::vector<double> dens(init.psi.size());
    for (std::size_t i = 0; i < dens.size(); ++i)
        dens[i] = std::norm(init.psi[i]);
    const auto ddens = gradient(dens, init.grid.dz());
    double steepest = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        const double dv = vgr_quantum_slope(f * dens[i], p) * f * ddens[i];
        steepest = std::min(steepest, dv);
    }
    if (steepest >= 0.0)
        return std::nullopt;
    return init.t - 1.0 / steepest;
}

FieldResult solve_reduced_meanfield(const Grid1D& grid, const std::vector<cplx>& e_field, const PhysicalParams& p,
                                    double t_final, bool strict)
{
    require_coupling(p);
    if (static_cast<int>(e_field.size()) != grid.nz)
        throw Error(ErrorKind::invalid_argument, "field size does not match the grid");
    std::vector<double> speed(e_field.size());
    for (std::size_t i = 0; i < speed.size(); ++i)
        speed[i] = vgr_kuang(std::norm(e_field[i]), p);
    GenericFan g = transport(grid, e_field, speed, 0.0, t_final, strict);
    FieldResult out;
    out.grid = grid;
    out.e_field = std::move(g.values_at_end);
    out.fan = std::move(g.fan);
    out.break_time = g.break_time;
    out.t = g.t_end;
    return out;
}

double polariton_flux(double psi_abs2, double m_mean, const PhysicalParams& p)
{
    if (psi_abs2 == 0.0)
        return 0.0;
    return p.u() * psi_abs2 * k_of(polariton_density(psi_abs2, m_mean), p.n_1d(), p.saturation_density());
}

double density_from_flux(double q, double m_mean, const PhysicalParams& p)
{
    if (!(q >= 0.0))
        throw Error(ErrorKind::invalid_argument, "photon flux must be >= 0");
    const double f = fock_factor(m_mean);
    const double a = p.saturation_density();
    if (f == 0.0)
        return q / (p.u() * a / (p.n_1d() + a));
    return ps_of_j(f * q / p.u(), p.n_1d(), a) / f;
}

double photon_flux(const PulseState& s, const PhysicalParams& p, double z_probe)
{
    require_coupling(p);
    const Grid1D& g = s.grid;
    if (z_probe < g.z0 || z_probe > g.z1)
        throw Error(ErrorKind::invalid_argument, "probe position outside the grid");
    const double x = std::clamp((z_probe - g.z0) / g.dz() - 0.5, 0.0, static_cast<double>(g.nz - 1));
    const int i = std::min(static_cast<int>(x), g.nz - 2);
    const double w = x - i;
    const double dens = (1.0 - w) * std::norm(s.psi[static_cast<std::size_t>(i)]) +
                        w * std::norm(s.psi[static_cast<std::size_t>(i + 1)]);
    return polariton_flux(dens, s.m_mean, p);
}

AdvectionDiffusionResult solve_advection_diffusion(const PulseState& init, const PhysicalParams& p, double t_final,
                                                   const AdvectionDiffusionOptions& opts)
{
    require_coupling(p);
    check_state(init);
    if (!(t_final > init.t))
        throw Error(ErrorKind::invalid_argument, "t_final must exceed the initial time");

    const Grid1D grid = init.grid;
    const int n = grid.nz;
    const double dz = grid.dz();
    const double m = init.m_mean;
    const bool periodic = opts.boundary == Boundary::periodic;
    const double beta = absorption_beta(p);
    const double vw = weak_velocity(p);

    AdvectionDiffusionResult out;
    out.state = init;
    auto& psi = out.state.psi;
    double t = init.t;
    const double total0 = init.norm();

    const auto inflow = [&](double time) -> cplx { return opts.inflow ? opts.inflow(time) : cplx{}; };
    const auto velocity = [&](double dens) { return velocity_of(dens, m, p); };
    const auto diffusivity = [&](double v) {
        const double vv = (opts.diffusion_velocity == DiffusionVelocity::weak) ? vw : v;
        return beta * vv * vv * vv;
    };

    std::vector<double> w(static_cast<std::size_t>(n)), flux(static_cast<std::size_t>(n));
    std::vector<cplx> moved(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
    std::vector<double> d_cell(static_cast<std::size_t>(n));

    const auto advect = [&](double dt, double time) {
        for (int i = 0; i < n; ++i) {
            w[i] = std::norm(psi[i]);
            flux[i] = polariton_flux(w[i], m, p);
        }
        const cplx in = periodic ? psi[n - 1] : inflow(time);
        const double in_w = std::norm(in);
        const double in_flux = periodic ? flux[n - 1] : polariton_flux(in_w, m, p);
        const double c = dt / dz;
        for (int i = 0; i < n; ++i) {
            const double upstream_flux = (i == 0) ? in_flux : flux[i - 1];
            const cplx upstream = (i == 0) ? in : psi[i - 1];
            double wn = w[i] - c * (flux[i] - upstream_flux);
            if (wn < 0.0) {
                out.clipped_mass += -wn * dz;
                wn = 0.0;
            }
            moved[i] = psi[i] - c * velocity(w[i]) * (psi[i] - upstream);
            const double mag = std::abs(moved[i]);
            const cplx phase = (mag > 0.0) ? moved[i] / mag : ((std::abs(psi[i]) > 0.0) ? psi[i] / std::abs(psi[i]) : cplx{1.0});
            next[i] = std::sqrt(wn) * phase;
        }
        psi.swap(next);
    };

    const auto diffuse = [&](double dt) {
        if (beta == 0.0)
            return;
        for (int i = 0; i < n; ++i)
            d_cell[i] = diffusivity(velocity(std::norm(psi[i])));
        const double r = dt / (dz * dz);
        for (int i = 0; i < n; ++i) {
            cplx acc{};
            if (i + 1 < n || periodic) {
                const int j = (i + 1) % n;
                acc += 0.5 * (d_cell[i] + d_cell[j]) * (psi[j] - psi[i]);
            }
            if (i > 0 || periodic) {
                const int j = (i + n - 1) % n;
                acc -= 0.5 * (d_cell[i] + d_cell[j]) * (psi[i] - psi[j]);
            }
            next[i] = psi[i] + r * acc;
        }
        psi.swap(next);
    };

    const auto record = [&](double time) {
        const double entrance = periodic ? polariton_flux(std::norm(psi[0]), m, p)
                                         : polariton_flux(std::norm(inflow(time)), m, p);
        out.flux.t.push_back(time);
        out.flux.entrance.push_back(entrance);
        out.flux.exit.push_back(polariton_flux(std::norm(psi[n - 1]), m, p));
    };

    record(t);
    double next_record = t + opts.record_every;
    constexpr double step_budget = 1e8;
    while (t < t_final) {
        double vmax = vw;
        double dmax = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = velocity(std::norm(psi[i]));
            vmax = std::max(vmax, v);
            dmax = std::max(dmax, diffusivity(v));
        }
        if (!opts.inflow && !periodic)
            vmax = std::max(vmax, vw);
        double dt = dz / vmax;
        if (dmax > 0.0)
            dt = std::min(dt, dz * dz / (2.0 * dmax));
        dt *= 0.4;
        if ((t_final - t) / dt > step_budget)
            throw Error(ErrorKind::stability, "grid solver would need more than 1e8 steps; dt = " +
                                                  std::to_string(dt) + " us");
        dt = std::min(dt, t_final - t);

        advect(0.5 * dt, t);
        diffuse(dt);
        advect(0.5 * dt, t + 0.5 * dt);
        t += dt;
        ++out.steps;
        out.norm_history.push_back(out.state.norm());
        if (t >= next_record || t >= t_final) {
            record(t);
            next_record = t + opts.record_every;
        }
    }
    out.state.t = t;
    if (out.clipped_mass > 1e-8 * std::max(total0, std::numeric_limits<double>::min()))
        throw Error(ErrorKind::invariant_violation,
                    "negative density clipped: " + std::to_string(out.clipped_mass));
    return out;
}

std::vector<double> gaussian_entrance_flux(const std::vector<double>& t, double peak_density, double width,
                                           double t_center, double m_mean, const PhysicalParams& p)
{
    if (!(peak_density > 0.0) || !(width > 0.0))
        throw Error(ErrorKind::invalid_argument, "pulse needs peak_density > 0 and width > 0");
    std::vector<double> q(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double s = (t[k] - t_center) / width;
        q[k] = polariton_flux(peak_density * std::exp(-s * s), m_mean, p);
    }
    return q;
}

double peak_time(const std::vector<double>& t, const std::vector<double>& y)
{
    std::size_t k = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (std::isfinite(y[i]) && (!std::isfinite(y[k]) || y[i] > y[k]))
            k = i;
    if (k == 0 || k + 1 >= y.size())
        return t[k];
    const double a = y[k - 1], b = y[k], c = y[k + 1];
    const double curv = a - 2.0 * b + c;
    if (curv >= 0.0 || !std::isfinite(curv))
        return t[k];
    return t[k] + 0.5 * (a - c) / curv * (t[k + 1] - t[k]);
}

double fwhm(const std::vector<double>& t, const std::vector<double>& y)
{
    double top = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (std::isfinite(y[i]) && y[i] > top) {
            top = y[i];
            k = i;
        }
    if (top <= 0.0)
        return 0.0;
    const double half = 0.5 * top;
    std::size_t lo = k;
    while (lo > 0 && std::isfinite(y[lo - 1]) && y[lo - 1] > half)
        --lo;
    std::size_t hi = k;
    while (hi + 1 < y.size() && std::isfinite(y[hi + 1]) && y[hi + 1] > half)
        ++hi;
    const auto cross = [&](std::size_t i, std::size_t j) {
        return t[i] + (half - y[i]) / (y[j] - y[i]) * (t[j] - t[i]);
    };
    const double left = (lo > 0) ? cross(lo - 1, lo) : t.front();
    const double right = (hi + 1 < y.size()) ? cross(hi, hi + 1) : t.back();
    return right - left;
}

TransitResult solve_transit(const std::vector<double>& t, const std::vector<double>& flux_in, double m_mean,
                            const PhysicalParams& p, const TransitOptions& opts)
{
    require_coupling(p);
    const std::size_t nt = t.size();
    if (nt < 16 || flux_in.size() != nt)
        throw Error(ErrorKind::invalid_argument, "transit needs >= 16 matching time samples");
    const double dt = (t.back() - t.front()) / static_cast<double>(nt - 1);
    if (!(dt > 0.0))
        throw Error(ErrorKind::invalid_argument, "time grid must increase");
    for (std::size_t k = 1; k < nt; ++k)
        if (std::abs(t[k] - t[k - 1] - dt) > 1e-9 * dt)
            throw Error(ErrorKind::invalid_argument, "time grid must be uniform");
    if (!(opts.courant > 0.0 && opts.courant <= 1.0))
        throw Error(ErrorKind::invalid_argument, "courant must lie in (0, 1]");

    const double length = p.length();
    const double vw = weak_velocity(p);
    const auto density = [&](double q) { return density_from_flux(std::max(q, 0.0), m_mean, p); };
    const auto slowness = [&](double q) { return 1.0 / velocity_of(density(q), m_mean, p); };

    TransitResult out;
    out.t = t;
    out.flux_in = flux_in;

    std::vector<double> snap_times = opts.snapshot_times;
    out.snapshots.resize(snap_times.size());
    for (std::size_t s = 0; s < snap_times.size(); ++s)
        out.snapshots[s].t = snap_times[s];
    const auto sample_snapshots = [&](double z, const std::vector<double>& q) {
        for (auto& snap : out.snapshots) {
            const double x = (snap.t - t.front()) / dt;
            double value = 0.0;
            if (x >= 0.0 && x <= static_cast<double>(nt - 1)) {
                const std::size_t k = std::min(static_cast<std::size_t>(x), nt - 2);
                const double w = x - static_cast<double>(k);
                const double a = q[k], b = q[k + 1];
                value = (std::isfinite(a) && std::isfinite(b)) ? (1.0 - w) * a + w * b : nan_value;
            }
            const double dens = std::isfinite(value) ? density(value) : nan_value;
            snap.z.push_back(z);
            snap.density.push_back(dens);
            snap.vgr.push_back(std::isfinite(dens) ? velocity_of(dens, m_mean, p) : nan_value);
        }
    };

    std::vector<double> s(nt);
    for (std::size_t k = 0; k < nt; ++k)
        s[k] = slowness(flux_in[k]);

    // each entrance sample is a characteristic t = t_k + s_k z
    std::size_t crossing = 0;
    const double z_break = first_crossing(t, s, &crossing) ;
    if (z_break < length) {
        out.break_position = z_break;
        out.break_time = t[crossing] + s[crossing] * z_break;
        if (opts.strict)
            throw Error(ErrorKind::wave_breaking,
                        "characteristics cross inside the medium at z = " + std::to_string(z_break) + " um");
    }

    const int z_steps = std::max(1, static_cast<int>(std::ceil(length / (opts.courant * dt * vw))));
    const double dz = length / z_steps;
    out.z_steps = z_steps;

    if (opts.mode == TransitMode::lossless) {
        const double z_cut = std::min(length, out.break_position.value_or(length));
        const auto at = [&](double z) {
            auto q = reconstruct(t, flux_in, s, dt, z, t);
            if (z > z_cut) {
                // past the crossing the solution is multivalued
                const double t_cut = *out.break_time;
                for (std::size_t k = 0; k < nt; ++k)
                    if (t[k] >= t_cut)
                        q[k] = nan_value;
            }
            return q;
        };
        if (!out.snapshots.empty())
            for (int j = 0; j <= z_steps; ++j) {
                const double z = j * dz;
                sample_snapshots(z, at(z));
            }
        out.flux_out = at(length);
    } else {
        const double beta = absorption_beta(p);
        std::vector<double> q = flux_in;
        std::vector<double> w(nt), amp(nt), r(nt);
        const auto diffuse = [&](double h) {
            if (beta == 0.0)
                return;
            for (std::size_t k = 0; k < nt; ++k) {
                amp[k] = std::sqrt(std::max(q[k], 0.0));
                double b = beta;
                if (opts.diffusion_velocity == DiffusionVelocity::weak) {
                    const double ratio = vw * slowness(q[k]);
                    b *= ratio * ratio * ratio;
                }
                r[k] = h * b / (dt * dt);
            }
            implicit_diffuse(amp, r);
            for (std::size_t k = 0; k < nt; ++k)
                q[k] = amp[k] * amp[k];
        };
        // substeps keep dz max(s) / dt <= courant as the profile changes
        const auto advect = [&](double h) {
            double smax = 0.0;
            for (std::size_t k = 0; k < nt; ++k) {
                w[k] = density(q[k]);
                smax = std::max(smax, slowness(q[k]));
            }
            const int sub = std::max(1, static_cast<int>(std::ceil(h * smax / (opts.courant * dt))));
            const double c = h / sub / dt;
            for (int it = 0; it < sub; ++it) {
                if (it > 0)
                    for (std::size_t k = 0; k < nt; ++k)
                        w[k] = density(q[k]);
                for (std::size_t k = nt; k-- > 0;) {
                    const double upstream = (k == 0) ? 0.0 : w[k - 1];
                    q[k] = std::max(q[k] - c * (w[k] - upstream), 0.0);
                }
            }
        };
        if (!out.snapshots.empty())
            sample_snapshots(0.0, q);
        for (int j = 0; j < z_steps; ++j) {
            diffuse(0.5 * dz);
            advect(dz);
            diffuse(0.5 * dz);
            if (!out.snapshots.empty())
                sample_snapshots((j + 1) * dz, q);
        }
        out.flux_out = q;
    }

    out.delay = peak_time(t, out.flux_out) - peak_time(t, flux_in);
    const double n_in = trapezoid(t, flux_in);
    out.transmitted_fraction = (n_in > 0.0) ? trapezoid(t, out.flux_out) / n_in : 0.0;
    out.fwhm_in = fwhm(t, flux_in);
    out.fwhm_out = fwhm(t, out.flux_out);
    return out;
}

MeanFieldState dark_initial_state(const Grid1D& grid, const std::vector<cplx>& e_field, const PhysicalParams& p)
{
    require_coupling(p);
    if (static_cast<int>(e_field.size()) != grid.nz)
        throw Error(ErrorKind::invalid_argument, "field size does not match the grid");
    MeanFieldState s;
    s.grid = grid;
    s.e_field = e_field;
    const std::size_t n = e_field.size();
    s.psi1.resize(n);
    s.psi_e.assign(n, cplx{});
    s.psi2.resize(n);
    const double k_over_o = p.kappa() / p.omega_c();
    for (std::size_t i = 0; i < n; ++i) {
        const double pop1 = p.n_1d() / (1.0 + k_over_o * k_over_o * std::norm(e_field[i]));
        s.psi1[i] = std::sqrt(pop1);
        s.psi2[i] = -k_over_o * e_field[i] * s.psi1[i];
    }
    return s;
}

namespace {

// exp(i A) for Hermitian A by scaling and squaring of the Taylor series
Eigen::Matrix3cd unitary_exp(const Eigen::Matrix3cd& a)
{
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }
    const Eigen::Matrix3cd x = cplx(0.0, scale) * a;
    Eigen::Matrix3cd term = Eigen::Matrix3cd::Identity();
    Eigen::Matrix3cd sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18)
            break;
    }
    for (int k = 0; k < squarings; ++k)
        sum = sum * sum;
    return sum;
}

} // namespace

MeanFieldResult integrate_mean_field(const MeanFieldState& init, const PhysicalParams& p, double t_final)
{
    const Grid1D grid = init.grid;
    const std::size_t n = static_cast<std::size_t>(grid.nz);
    if (init.e_field.size() != n || init.psi1.size() != n || init.psi_e.size() != n || init.psi2.size() != n)
        throw Error(ErrorKind::invalid_argument, "mean-field arrays do not match the grid");
    if (!(t_final > init.t))
        throw Error(ErrorKind::invalid_argument, "t_final must exceed the initial time");

    const double g = p.collective_coupling();
    const double shift_dt = grid.dz() / p.u();
    // coupling and detuning set the stiff local scale; stiff * dt <= 0.1 keeps the
    // field/atom splitting stable (sub = 1 is an exact shift and goes unstable near 0.2)
    const double stiff = std::max({g, std::abs(p.delta()), p.omega_c()});
    const int sub = std::max(1, static_cast<int>(std::ceil(shift_dt * stiff / 0.1)));
    const double dt = shift_dt / sub;
    const double courant = 1.0 / sub;
    const long long steps = std::llround((t_final - init.t) / dt);
    if (steps < 1)
        throw Error(ErrorKind::invalid_argument, "t_final is shorter than one step");
    if (static_cast<double>(steps) * static_cast<double>(n) > 5e9)
        throw Error(ErrorKind::stability,
                    "mean-field run needs " + std::to_string(steps) + " steps; stiff scale max(g, |Delta|, Omega_C) = " +
                        std::to_string(stiff) + " 1/us");

    MeanFieldResult out;
    out.state = init;
    auto& st = out.state;
    out.diagnostics.substeps = sub;

    std::vector<double> density0(n);
    for (std::size_t i = 0; i < n; ++i)
        density0[i] = std::norm(init.psi1[i]) + std::norm(init.psi_e[i]) + std::norm(init.psi2[i]);

    const double k_over_o2 = (p.kappa() / p.omega_c()) * (p.kappa() / p.omega_c());
    const auto monitor = [&]() {
        double max_e = 0.0, max_2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::norm(st.psi1[i]) + std::norm(st.psi_e[i]) + std::norm(st.psi2[i]);
            out.diagnostics.max_density_drift =
                std::max(out.diagnostics.max_density_drift, std::abs(d - density0[i]) / p.n_1d());
            const double res = std::abs(std::norm(st.psi1[i]) * (1.0 + k_over_o2 * std::norm(st.e_field[i])) - p.n_1d());
            out.diagnostics.max_adiabatic_residual = std::max(out.diagnostics.max_adiabatic_residual, res);
            max_e = std::max(max_e, std::norm(st.psi_e[i]));
            max_2 = std::max(max_2, std::norm(st.psi2[i]));
        }
        if (max_2 > 0.0)
            out.diagnostics.max_excited_fraction = std::max(out.diagnostics.max_excited_fraction, max_e / max_2);
    };

    const auto atoms = [&](double h) {
        for (std::size_t i = 0; i < n; ++i) {
            const cplx ke = p.kappa() * st.e_field[i];
            Eigen::Matrix3cd gen;
            gen << 0.0, std::conj(ke), 0.0,
                   ke, p.delta(), p.omega_c(),
                   0.0, p.omega_c(), 0.0;
            const Eigen::Matrix3cd u = unitary_exp(h * gen);
            const Eigen::Vector3cd v(st.psi1[i], st.psi_e[i], st.psi2[i]);
            const Eigen::Vector3cd w = u * v;
            st.psi1[i] = w[0];
            st.psi_e[i] = w[1];
            st.psi2[i] = w[2];
        }
    };

    std::vector<cplx> e_next(n);
    const auto field = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            const cplx upstream = (i == 0) ? cplx{} : st.e_field[i - 1];
            e_next[i] = st.e_field[i] - courant * (st.e_field[i] - upstream) +
                        dt * cplx(0.0, p.kappa()) * std::conj(st.psi1[i]) * st.psi_e[i];
        }
        st.e_field.swap(e_next);
    };

    monitor();
    for (long long k = 0; k < steps; ++k) {
        atoms(0.5 * dt);
        field();
        atoms(0.5 * dt);
        monitor();
    }
    st.t = init.t + static_cast<double>(steps) * dt;
    out.diagnostics.steps = static_cast<int>(steps);
    return out;
}

double centroid(const Grid1D& grid, const std::vector<cplx>& f)
{
    double num = 0.0, den = 0.0;
    for (int i = 0; i < grid.nz; ++i) {
        const double w = std::norm(f[static_cast<std::size_t>(i)]);
        num += w * grid.z(i);
        den += w;
    }
    return den > 0.0 ? num / den : nan_value;
}

} // namespace slowlight
