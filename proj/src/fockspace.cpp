#include "slowlight/fockspace.hpp"

#include "slowlight/darkstate.hpp"
#include "slowlight/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slowlight {

namespace {

int to_int(std::int64_t v, const char* what)
{
    if (v > 60000)
        throw Error(ErrorKind::oracle_scale_only, std::string(what) + " too large for an explicit Fock basis");
    return static_cast<int>(v);
}

Occupation dark_basis_state(std::int64_t n_atoms, std::int64_t m_pol, std::int64_t m)
{
    return Occupation{static_cast<int>(n_atoms - m), static_cast<int>(m), 0,
                      static_cast<int>(m_pol - m)};
}

} // namespace

int Occupation::operator[](Mode mode) const noexcept
{
    switch (mode) {
    case Mode::g1: return n1;
    case Mode::g2: return n2;
    case Mode::excited: return ne;
    case Mode::photon: return nph;
    }
    return 0;
}

FockSector build_dark_state(std::int64_t n_atoms, std::int64_t m_pol, double xi)
{
    if (n_atoms < 0 || m_pol < 0)
        throw Error(ErrorKind::invalid_argument, "N and M_D must be >= 0");
    if (!(xi >= 0.0) || !std::isfinite(xi))
        throw Error(ErrorKind::invalid_argument, "xi must be finite and >= 0");
    const std::int64_t m_max = std::min(n_atoms, m_pol);
    if (m_max > fock_oracle_cap)
        throw Error(ErrorKind::oracle_scale_only,
                    "min(N, M_D) = " + std::to_string(m_max) + " exceeds " +
                        std::to_string(fock_oracle_cap));

    FockSector s{n_atoms, m_pol, xi, std::vector<double>(static_cast<std::size_t>(m_max + 1), 0.0)};
    if (xi == 0.0) {
        s.amps[0] = 1.0;
        return s;
    }
    // squared amplitudes relative to the largest term, walked outward with the
    // term ratio (N-m)(M-m) xi / (m+1); the sum of these terms is A(N, M_D)
    // up to the common factor, so the state is normalised to rounding
    const double nd = static_cast<double>(n_atoms), md = static_cast<double>(m_pol);
    const auto ratio = [&](std::int64_t m) {
        const double k = static_cast<double>(m);
        return (nd - k) * (md - k) * xi / (k + 1.0);
    };
    std::int64_t peak = 0;
    while (peak < m_max && ratio(peak) > 1.0)
        ++peak;
    std::vector<double> w(static_cast<std::size_t>(m_max + 1), 0.0);
    w[static_cast<std::size_t>(peak)] = 1.0;
    for (std::int64_t m = peak; m < m_max; ++m)
        w[static_cast<std::size_t>(m + 1)] = w[static_cast<std::size_t>(m)] * ratio(m);
    for (std::int64_t m = peak; m > 0; --m)
        w[static_cast<std::size_t>(m - 1)] = w[static_cast<std::size_t>(m)] / ratio(m - 1);
    double total = 0.0;
    for (std::int64_t m = m_max; m >= 0; --m)
        total += w[static_cast<std::size_t>(m)];
    for (std::int64_t m = 0; m <= m_max; ++m) {
        const double mag = std::sqrt(w[static_cast<std::size_t>(m)] / total);
        s.amps[static_cast<std::size_t>(m)] = (m % 2 == 0) ? mag : -mag;
    }
    return s;
}

ZeroModeSpace::ZeroModeSpace(int n_lo, int n_hi, int m_lo, int m_hi, int excited_cap)
{
    if (n_lo < 0 || m_lo < 0 || n_hi < n_lo || m_hi < m_lo || excited_cap < 0)
        throw Error(ErrorKind::invalid_argument, "bad ZeroModeSpace bounds");
    // one (atoms, excitations) sector at a time; n2 and ne fix the rest
    for (int atoms = n_lo; atoms <= n_hi; ++atoms)
        for (int exc = m_lo; exc <= m_hi; ++exc)
            for (int ne = 0; ne <= std::min({excited_cap, atoms, exc}); ++ne)
                for (int n2 = 0; n2 + ne <= std::min(atoms, exc); ++n2) {
                    const Occupation occ{atoms - n2 - ne, n2, ne, exc - n2 - ne};
                    lookup_.emplace(key(occ), states_.size());
                    states_.push_back(occ);
                }
}

std::uint64_t ZeroModeSpace::key(const Occupation& occ) noexcept
{
    const auto part = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint16_t>(v)); };
    return (part(occ.n1) << 48) | (part(occ.n2) << 32) | (part(occ.ne) << 16) | part(occ.nph);
}

std::optional<std::size_t> ZeroModeSpace::index_of(const Occupation& occ) const
{
    if (occ.n1 < 0 || occ.n2 < 0 || occ.ne < 0 || occ.nph < 0)
        return std::nullopt;
    const auto it = lookup_.find(key(occ));
    if (it == lookup_.end())
        return std::nullopt;
    return it->second;
}

SparseMatrix ZeroModeSpace::annihilate(Mode mode) const
{
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(states_.size());
    for (std::size_t col = 0; col < states_.size(); ++col) {
        Occupation occ = states_[col];
        const int n = occ[mode];
        if (n == 0)
            continue;
        switch (mode) {
        case Mode::g1: --occ.n1; break;
        case Mode::g2: --occ.n2; break;
        case Mode::excited: --occ.ne; break;
        case Mode::photon: --occ.nph; break;
        }
        if (auto row = index_of(occ))
            entries.emplace_back(static_cast<int>(*row), static_cast<int>(col), std::sqrt(static_cast<double>(n)));
    }
    SparseMatrix op(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    op.setFromTriplets(entries.begin(), entries.end());
    return op;
}

SparseMatrix ZeroModeSpace::number(Mode mode) const
{
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t i = 0; i < states_.size(); ++i)
        if (const int n = states_[i][mode]; n != 0)
            entries.emplace_back(static_cast<int>(i), static_cast<int>(i), static_cast<double>(n));
    SparseMatrix op(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    op.setFromTriplets(entries.begin(), entries.end());
    return op;
}

SparseMatrix ZeroModeSpace::atom_number() const
{
    return SparseMatrix(number(Mode::g1) + number(Mode::g2) + number(Mode::excited));
}

SparseMatrix ZeroModeSpace::excitation_number() const
{
    return SparseMatrix(number(Mode::photon) + number(Mode::g2) + number(Mode::excited));
}

SparseMatrix ZeroModeSpace::hamiltonian(const PhysicalParams& p) const
{
    const SparseMatrix a = annihilate(Mode::photon);
    const SparseMatrix b1 = annihilate(Mode::g1);
    const SparseMatrix b2 = annihilate(Mode::g2);
    const SparseMatrix e = annihilate(Mode::excited);
    const SparseMatrix et = e.transpose();

    // lowering products first, so every intermediate state stays in the space
    const SparseMatrix probe_down = SparseMatrix(et * SparseMatrix(b1 * a));
    const SparseMatrix coupling_down = SparseMatrix(et * b2);
    const double g0 = p.kappa() / std::sqrt(p.length());

    SparseMatrix h = SparseMatrix(-p.delta() * number(Mode::excited));
    h -= g0 * SparseMatrix(probe_down + SparseMatrix(probe_down.transpose()));
    h -= p.omega_c() * SparseMatrix(coupling_down + SparseMatrix(coupling_down.transpose()));
    h.prune(0.0);
    return h;
}

Eigen::VectorXd ZeroModeSpace::embed(const FockSector& s) const
{
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t m = 0; m < s.amps.size(); ++m) {
        const auto idx = index_of(dark_basis_state(s.n_atoms, s.m_pol, static_cast<std::int64_t>(m)));
        if (!idx)
            throw Error(ErrorKind::invalid_argument, "dark-state basis vector outside the Fock space");
        v[static_cast<Eigen::Index>(*idx)] = s.amps[m];
    }
    return v;
}

DarkResidual dark_condition_residual(const FockSector& s, const PhysicalParams& p)
{
    const int n = to_int(s.n_atoms, "N");
    const int m = to_int(s.m_pol, "M_D");
    // ne <= 1 is enough to represent the image of psi_e on a state with ne = 0
    const ZeroModeSpace space(std::max(n - 1, 0), n, std::max(m - 1, 0), m, 1);
    const Eigen::VectorXd psi = space.embed(s);

    const SparseMatrix a = space.annihilate(Mode::photon);
    const SparseMatrix b1 = space.annihilate(Mode::g1);
    const SparseMatrix b2 = space.annihilate(Mode::g2);
    const SparseMatrix e = space.annihilate(Mode::excited);

    const Eigen::VectorXd dark_image =
        (p.kappa() / std::sqrt(p.length())) * (a * (b1 * psi)) + p.omega_c() * (b2 * psi);
    const Eigen::VectorXd excited_image = e * psi;
    return DarkResidual{excited_image.norm(), dark_image.norm()};
}

A0Action a0_action_ratio(std::int64_t n_atoms, std::int64_t m_pol, double xi)
{
    if (m_pol < 1)
        throw Error(ErrorKind::invalid_argument, "a0 action needs M_D >= 1");
    const int n = to_int(n_atoms, "N");
    const int m = to_int(m_pol, "M_D");
    const ZeroModeSpace space(n, n, m - 1, m, 0);

    const Eigen::VectorXd upper = space.embed(build_dark_state(n_atoms, m_pol, xi));
    const Eigen::VectorXd lower = space.embed(build_dark_state(n_atoms, m_pol - 1, xi));
    const Eigen::VectorXd image = space.annihilate(Mode::photon) * upper;

    const double proj = lower.dot(image);
    const double ratio = proj * proj / static_cast<double>(m_pol);
    return A0Action{ratio, (image - proj * lower).norm()};
}

double zero_energy_check(std::int64_t n_atoms, std::int64_t m_pol, double xi, const PhysicalParams& p)
{
    const int n = to_int(n_atoms, "N");
    const int m = to_int(m_pol, "M_D");
    const ZeroModeSpace space(std::max(n - 1, 0), n, std::max(m - 1, 0), m, 1);
    const Eigen::VectorXd psi = space.embed(build_dark_state(n_atoms, m_pol, xi));
    return (space.hamiltonian(p) * psi).norm();
}

ConservationNorms conservation_check(int n_max, int m_max, const PhysicalParams& p)
{
    const ZeroModeSpace space(0, n_max, 0, m_max, std::min(n_max, m_max));
    const SparseMatrix h = space.hamiltonian(p);
    const SparseMatrix n_op = space.atom_number();
    const SparseMatrix m_op = space.excitation_number();
    const SparseMatrix cn = SparseMatrix(h * n_op) - SparseMatrix(n_op * h);
    const SparseMatrix cm = SparseMatrix(h * m_op) - SparseMatrix(m_op * h);
    return ConservationNorms{cn.norm(), cm.norm(), space.size()};
}

PhysicalParams params_for_xi(double xi, double delta)
{
    if (!(xi > 0.0))
        throw Error(ErrorKind::invalid_argument, "xi must be > 0");
    return PhysicalParams::Builder{}
        .u(1.0)
        .kappa(1.0)
        .omega_c(1.0 / std::sqrt(xi))
        .n_1d(1.0)
        .length(1.0)
        .delta(delta)
        .mode_area(1.0)
        .build();
}

} // namespace slowlight
