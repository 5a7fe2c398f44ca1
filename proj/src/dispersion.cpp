#include "slowlight/dispersion.hpp"

#include "slowlight/darkstate.hpp"
#include "slowlight/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace slowlight {

const char* to_string(BranchLabel label) noexcept
{
    switch (label) {
    case BranchLabel::dark: return "dark";
    case BranchLabel::bright: return "bright";
    case BranchLabel::excited_like: return "excited-like";
    }
    return "unknown";
}

const char* to_string(BranchClass c) noexcept
{
    switch (c) {
    case BranchClass::slow: return "slow";
    case BranchClass::fast: return "fast";
    case BranchClass::mixed: return "mixed";
    }
    return "unknown";
}

namespace {

constexpr double min_tracking_overlap = 0.7;

struct RawSpectrum {
    Eigen::Vector3d values;
    Eigen::Matrix3d vectors;
};

// det(H - w) = (a - w)(w^2 + Delta w - Omega^2) + g^2 w
double char_poly(double w, double a, double g, const PhysicalParams& p)
{
    const double oc = p.omega_c();
    return (a - w) * (w * w + p.delta() * w - oc * oc) + g * g * w;
}

double char_poly_slope(double w, double a, double g, const PhysicalParams& p)
{
    const double oc = p.omega_c();
    return -(w * w + p.delta() * w - oc * oc) + (a - w) * (2.0 * w + p.delta()) + g * g;
}

// Newton refinement against the characteristic polynomial; the dense solver
// is only accurate to eps * ||H||, the dark root needs relative accuracy.
double polish_root(double w, double a, double g, const PhysicalParams& p)
{
    double best = w;
    double best_res = std::abs(char_poly(w, a, g, p));
    for (int it = 0; it < 4 && best_res > 0.0; ++it) {
        const double slope = char_poly_slope(best, a, g, p);
        if (slope == 0.0 || !std::isfinite(slope))
            break;
        const double next = best - char_poly(best, a, g, p) / slope;
        const double res = std::abs(char_poly(next, a, g, p));
        if (!(res < best_res))
            break;
        best = next;
        best_res = res;
    }
    return best;
}

RawSpectrum raw_spectrum(double dk, const PhysicalParams& p)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(single_excitation_matrix(dk, p));
    RawSpectrum out{solver.eigenvalues(), solver.eigenvectors()};
    const double a = p.u() * dk;
    const double g = p.collective_coupling();
    const double gap_floor = 1e-8 * (std::abs(a) + g + p.omega_c() + std::abs(p.delta()));
    for (int i = 0; i < 3; ++i) {
        double gap = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 3; ++j)
            if (j != i)
                gap = std::min(gap, std::abs(out.values[i] - out.values[j]));
        if (gap > gap_floor)
            out.values[i] = polish_root(out.values[i], a, g, p);
    }
    return out;
}

// Labels at dk = 0: dark is the exact null vector; of the remaining pair the
// bright one continues to 0 as the coupling vanishes.
std::array<BranchLabel, 3> labels_at_origin(const RawSpectrum& s, const PhysicalParams& p)
{
    Eigen::Vector3d dark(p.omega_c(), 0.0, -p.collective_coupling());
    dark.normalize();
    int dark_idx = 0;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
        const double ov = std::abs(dark.dot(s.vectors.col(i)));
        if (ov > best) {
            best = ov;
            dark_idx = i;
        }
    }
    int lo = -1, hi = -1;
    for (int i = 0; i < 3; ++i) {
        if (i == dark_idx)
            continue;
        if (lo < 0)
            lo = i;
        else
            hi = i;
    }
    if (s.values[lo] > s.values[hi])
        std::swap(lo, hi);
    std::array<BranchLabel, 3> labels{};
    labels[dark_idx] = BranchLabel::dark;
    const bool bright_is_upper = p.delta() >= 0.0;
    labels[bright_is_upper ? hi : lo] = BranchLabel::bright;
    labels[bright_is_upper ? lo : hi] = BranchLabel::excited_like;
    return labels;
}

// For each previous column, the index of the best-overlapping new column.
std::array<int, 3> match_columns(const Eigen::Matrix3d& prev, const Eigen::Matrix3d& next, double& worst)
{
    const Eigen::Matrix3d ov = (prev.transpose() * next).cwiseAbs();
    std::array<int, 3> perm{-1, -1, -1};
    std::array<bool, 3> used{false, false, false};
    worst = 1.0;
    // greedy on the global maximum each round
    for (int round = 0; round < 3; ++round) {
        double best = -1.0;
        int bi = -1, bj = -1;
        for (int i = 0; i < 3; ++i) {
            if (perm[i] >= 0)
                continue;
            for (int j = 0; j < 3; ++j)
                if (!used[j] && ov(i, j) > best) {
                    best = ov(i, j);
                    bi = i;
                    bj = j;
                }
        }
        perm[bi] = bj;
        used[bj] = true;
        worst = std::min(worst, best);
    }
    return perm;
}

struct Tracked {
    RawSpectrum spectrum;
    std::array<BranchLabel, 3> labels;
};

Tracked track_step(const Tracked& from, double dk, const PhysicalParams& p, bool strict)
{
    RawSpectrum next = raw_spectrum(dk, p);
    double worst = 1.0;
    const auto perm = match_columns(from.spectrum.vectors, next.vectors, worst);
    if (strict && worst < min_tracking_overlap)
        throw Error(ErrorKind::branch_tracking,
                    "eigenvector overlap " + std::to_string(worst) + " < 0.7 at dk = " + std::to_string(dk) +
                        "; refine the wavenumber grid");
    Tracked out{next, {}};
    for (int i = 0; i < 3; ++i)
        out.labels[perm[i]] = from.labels[i];
    // keep a consistent sign so later overlaps compare like with like
    for (int i = 0; i < 3; ++i)
        if (from.spectrum.vectors.col(i).dot(out.spectrum.vectors.col(perm[i])) < 0.0)
            out.spectrum.vectors.col(perm[i]) *= -1.0;
    return out;
}

Tracked origin(const PhysicalParams& p)
{
    RawSpectrum s = raw_spectrum(0.0, p);
    auto labels = labels_at_origin(s, p);
    return Tracked{s, labels};
}

// Continuation from the origin with adaptive substeps.
Tracked continue_to(double dk, const PhysicalParams& p)
{
    Tracked cur = origin(p);
    double at = 0.0;
    double step = dk;
    int guard = 0;
    while (at != dk) {
        if (++guard > 10000)
            throw Error(ErrorKind::branch_tracking, "continuation did not converge");
        const double target = (std::abs(dk - at) <= std::abs(step)) ? dk : at + step;
        Tracked trial = track_step(cur, target, p, false);
        double worst = 1.0;
        match_columns(cur.spectrum.vectors, trial.spectrum.vectors, worst);
        if (worst < 0.95 && std::abs(step) > 1e-12 * (std::abs(dk) + 1e-300)) {
            step *= 0.5;
            continue;
        }
        cur = trial;
        at = target;
    }
    return cur;
}

double dark_frequency(double dk, const PhysicalParams& p)
{
    const Tracked t = continue_to(dk, p);
    for (int i = 0; i < 3; ++i)
        if (t.labels[i] == BranchLabel::dark)
            return t.spectrum.values[i];
    throw Error(ErrorKind::branch_tracking, "dark branch lost");
}

struct TwoLevelEigen {
    Eigen::Vector2d values;   // (plus, minus)
    Eigen::Matrix2d vectors;  // columns: plus, minus
};

TwoLevelEigen two_level_eigen(double g, double oc, double delta, double domega)
{
    const double d11 = domega + g * g / delta;
    const double d22 = oc * oc / delta;
    const double d12 = g * oc / delta;
    const double half_sum = 0.5 * (d11 + d22);
    const double root = std::hypot(0.5 * (d11 - d22), d12);
    const double product = oc * oc * domega / delta;  // d11 d22 - d12^2
    const double sign = delta > 0.0 ? 1.0 : -1.0;

    // the branch with the larger magnitude is formed directly, the other by Vieta
    double plus, minus;
    if (half_sum * sign >= 0.0) {
        plus = half_sum + sign * root;
        minus = (plus != 0.0) ? product / plus : half_sum - sign * root;
    } else {
        minus = half_sum - sign * root;
        plus = (minus != 0.0) ? product / minus : half_sum + sign * root;
    }

    TwoLevelEigen out;
    out.values = {plus, minus};
    for (int k = 0; k < 2; ++k) {
        const double w = out.values[k];
        // (M - w) v = 0; use the better-conditioned row
        Eigen::Vector2d v;
        if (std::abs(d11 - w) + std::abs(d12) >= std::abs(d22 - w) + std::abs(d12))
            v = {-d12, d11 - w};
        else
            v = {d22 - w, -d12};
        if (v.norm() == 0.0)
            v = (k == 0) ? Eigen::Vector2d(0.0, 1.0) : Eigen::Vector2d(1.0, 0.0);
        out.vectors.col(k) = v.normalized();
    }
    return out;
}

} // namespace

Eigen::Matrix3d single_excitation_matrix(double dk, const PhysicalParams& p)
{
    const double g = p.collective_coupling();
    const double oc = p.omega_c();
    Eigen::Matrix3d h;
    h << p.u() * dk, -g, 0.0,
         -g, -p.delta(), -oc,
         0.0, -oc, 0.0;
    return h;
}

std::array<Eigenpair, 3> single_excitation_spectrum(double dk, const PhysicalParams& p)
{
    const Tracked t = continue_to(dk, p);
    std::array<Eigenpair, 3> out;
    for (int i = 0; i < 3; ++i)
        out[i] = Eigenpair{t.spectrum.values[i], t.spectrum.vectors.col(i), t.labels[i]};
    std::sort(out.begin(), out.end(), [](const Eigenpair& a, const Eigenpair& b) { return a.omega < b.omega; });
    return out;
}

double dark_branch_group_velocity(const PhysicalParams& p)
{
    if (p.kappa() == 0.0)
        throw Error(ErrorKind::coupling_off, "dark branch group velocity needs kappa > 0");
    const double g = p.collective_coupling();
    const double h = 1e-6 * p.omega_c() * p.omega_c() / (p.u() * g);
    const auto central = [&](double step) {
        return (dark_frequency(step, p) - dark_frequency(-step, p)) / (2.0 * step);
    };
    const double coarse = central(h);
    const double fine = central(0.5 * h);
    return (4.0 * fine - coarse) / 3.0;
}

double vgr_quantum(double p_s, const PhysicalParams& p)
{
    if (!(p_s >= 0.0))
        throw Error(ErrorKind::invalid_argument, "P_S must be >= 0");
    const double rho = derived_rho(p);
    const double y = p_s / p.n_1d() - 1.0 + rho;
    const double r = std::sqrt(y * y + 4.0 * rho);
    if (y >= 0.0)
        return 0.5 * p.u() * (1.0 + y / r);
    // 1 + y/r = 4 rho / (r (r - y)) without cancellation
    return 2.0 * p.u() * rho / (r * (r - y));
}

double vgr_quantum_slope(double p_s, const PhysicalParams& p)
{
    const double rho = derived_rho(p);
    const double y = p_s / p.n_1d() - 1.0 + rho;
    const double r2 = y * y + 4.0 * rho;
    // d/dy [y / sqrt(y^2 + 4 rho)] = 4 rho / r^3
    return 0.5 * p.u() * 4.0 * rho / (r2 * std::sqrt(r2)) / p.n_1d();
}

double vgr_kuang(double j, const PhysicalParams& p)
{
    if (!(j >= 0.0))
        throw Error(ErrorKind::invalid_argument, "J must be >= 0");
    const double oc2 = p.omega_c() * p.omega_c();
    const double sum = p.kappa() * p.kappa() * j + oc2;
    const double g = p.collective_coupling();
    return p.u() * sum * sum / (sum * sum + oc2 * g * g);
}

double polariton_density_from_photons(double j, const PhysicalParams& p)
{
    return ps_of_j(j, p.n_1d(), p.saturation_density());
}

Eigen::Matrix2d adiabatic_two_level_matrix(double domega, const PhysicalParams& p)
{
    if (p.delta() == 0.0)
        throw Error(ErrorKind::adiabatic_elimination_invalid, "Delta = 0");
    const double g = p.collective_coupling();
    const double oc = p.omega_c();
    Eigen::Matrix2d m;
    m << domega + g * g / p.delta(), g * oc / p.delta(),
         g * oc / p.delta(), oc * oc / p.delta();
    return m;
}

TwoLevelModes adiabatic_two_level(double domega, const PhysicalParams& p)
{
    if (p.delta() == 0.0)
        throw Error(ErrorKind::adiabatic_elimination_invalid, "Delta = 0");
    const double g = p.collective_coupling();
    const double oc = p.omega_c();
    const TwoLevelEigen e = two_level_eigen(g, oc, p.delta(), domega);
    TwoLevelModes out;
    out.omega_plus = e.values[0];
    out.omega_minus = e.values[1];
    // cot(theta) = (Omega_C / g) (1 - domega / omega_plus)
    const double cot = (oc / g) * (1.0 - domega / out.omega_plus);
    out.theta = std::atan2(1.0, cot);
    return out;
}

std::vector<BranchClassification> dark_branch_classifier(const std::vector<double>& domega_grid,
                                                         const PhysicalParams& p,
                                                         const ClassifierThresholds& thresholds)
{
    if (p.delta() == 0.0)
        throw Error(ErrorKind::adiabatic_elimination_invalid, "Delta = 0");
    const double g = p.collective_coupling();
    const double oc = p.omega_c();
    const double window = spectral_window(p, WindowRegime::far_detuned);
    constexpr int continuation_steps = 400;

    std::vector<BranchClassification> out;
    out.reserve(domega_grid.size());
    for (const double dw : domega_grid) {
        BranchClassification c;
        c.domega = dw;

        const double h = 1e-6 * std::max(std::abs(dw), window);
        const double up = two_level_eigen(g, oc, p.delta(), dw + h).values[1];
        const double down = two_level_eigen(g, oc, p.delta(), dw - h).values[1];
        c.velocity_ratio = std::abs((up - down) / (2.0 * h));

        // follow |(-)> while the probe coupling is switched off
        Eigen::Vector2d state = two_level_eigen(g, oc, p.delta(), dw).vectors.col(1);
        for (int step = 1; step <= continuation_steps; ++step) {
            const double scale = 1.0 - (1.0 - 1e-6) * step / continuation_steps;
            const TwoLevelEigen e = two_level_eigen(g * scale, oc, p.delta(), dw);
            const double o0 = std::abs(state.dot(e.vectors.col(0)));
            const double o1 = std::abs(state.dot(e.vectors.col(1)));
            Eigen::Vector2d next = (o0 > o1) ? e.vectors.col(0) : e.vectors.col(1);
            if (next.dot(state) < 0.0)
                next = -next;
            state = next;
        }
        c.photon_overlap = std::abs(state[0]);

        const bool slow = c.velocity_ratio < thresholds.velocity_ratio;
        if (slow && c.photon_overlap > thresholds.photon_overlap)
            c.cls = BranchClass::slow;
        else if (!slow)
            c.cls = BranchClass::fast;
        else
            c.cls = BranchClass::mixed;
        out.push_back(c);
    }
    return out;
}

DispersionBranch dispersion_curve(const std::vector<double>& dk_grid, const PhysicalParams& p)
{
    if (!std::is_sorted(dk_grid.begin(), dk_grid.end()))
        throw Error(ErrorKind::invalid_argument, "dispersion grid must be sorted");
    DispersionBranch out;
    out.dk_grid = dk_grid;
    for (auto& column : out.omega)
        column.assign(dk_grid.size(), 0.0);

    const auto store = [&](std::size_t idx, const Tracked& t) {
        for (int i = 0; i < 3; ++i)
            out.omega[static_cast<int>(t.labels[i])][idx] = t.spectrum.values[i];
    };

    const auto first_nonneg = static_cast<std::size_t>(
        std::lower_bound(dk_grid.begin(), dk_grid.end(), 0.0) - dk_grid.begin());
    const Tracked start = origin(p);

    Tracked cur = start;
    for (std::size_t i = first_nonneg; i < dk_grid.size(); ++i) {
        cur = track_step(cur, dk_grid[i], p, true);
        store(i, cur);
    }
    cur = start;
    for (std::size_t i = first_nonneg; i-- > 0;) {
        cur = track_step(cur, dk_grid[i], p, true);
        store(i, cur);
    }

    if (p.delta() != 0.0) {
        out.theta.reserve(dk_grid.size());
        for (const double dk : dk_grid)
            out.theta.push_back(adiabatic_two_level(p.u() * dk, p).theta);
    }
    return out;
}

} // namespace slowlight
