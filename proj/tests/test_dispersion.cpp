#include <doctest.h>

#include "slowlight/darkstate.hpp"
#include "slowlight/dispersion.hpp"
#include "slowlight/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace slowlight;

namespace {

PhysicalParams make(double u, double kappa, double oc, double delta, double n = 1.0)
{
    return PhysicalParams::Builder{}.u(u).kappa(kappa).omega_c(oc).n_1d(n).length(100.0).mode_area(1.0).delta(delta).build();
}

double labelled(const std::array<Eigenpair, 3>& s, BranchLabel l)
{
    for (const auto& e : s)
        if (e.label == l)
            return e.omega;
    FAIL("label missing");
    return 0.0;
}

} // namespace

TEST_SUITE("dispersion") {

TEST_CASE("zero eigenvalue at dk = 0")
{
    for (const double delta : {0.0, 3.0, -40.0})
        for (const double oc : {0.1, 1.0, 7.0}) {
            const auto p = make(50.0, 2.0, oc, delta);
            const auto s = single_excitation_spectrum(0.0, p);
            CHECK(std::abs(labelled(s, BranchLabel::dark)) < 1e-12 * (2.0 + oc + std::abs(delta)));
            // eigenvector is (Omega, 0, -g) up to sign
            for (const auto& e : s)
                if (e.label == BranchLabel::dark) {
                    Eigen::Vector3d d(oc, 0.0, -2.0);
                    CHECK(std::abs(std::abs(e.vector.dot(d.normalized())) - 1.0) < 1e-12);
                }
        }
}

TEST_CASE("bright branch sits on the side of the detuning")
{
    const auto up = single_excitation_spectrum(0.0, make(1.0, 1.0, 1.0, 5.0));
    CHECK(up[2].label == BranchLabel::bright);
    const auto down = single_excitation_spectrum(0.0, make(1.0, 1.0, 1.0, -5.0));
    CHECK(down[0].label == BranchLabel::bright);
}

TEST_CASE("trace and determinant")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double dk = uni(rng);
        const double delta = uni(rng);
        const auto p = make(2.0, 1.3, 0.8, delta);
        const auto s = single_excitation_spectrum(dk, p);
        const double sum = s[0].omega + s[1].omega + s[2].omega;
        CHECK(sum == doctest::Approx(2.0 * dk - delta).epsilon(1e-12).scale(10.0));
        // det H = u dk * Omega^2 * (-1)... computed directly
        const double det = single_excitation_matrix(dk, p).determinant();
        CHECK(s[0].omega * s[1].omega * s[2].omega == doctest::Approx(det).epsilon(1e-10).scale(10.0));
        CHECK(s[0].omega <= s[1].omega);
        CHECK(s[1].omega <= s[2].omega);
    }
}

TEST_CASE("spectrum is real")
{
    const auto p = make(3.0, 0.7, 1.1, 2.5);
    for (const double dk : {-2.0, -0.1, 0.0, 0.4, 5.0}) {
        const Eigen::Matrix3cd h = single_excitation_matrix(dk, p).cast<std::complex<double>>();
        Eigen::ComplexEigenSolver<Eigen::Matrix3cd> solver(h);
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(solver.eigenvalues()[i].imag()) < 1e-13);
    }
}

TEST_CASE("coupling off decouples the photon")
{
    const auto p = make(4.0, 0.0, 1.5, 2.0);
    for (const double dk : {-1.0, 0.0, 0.3, 2.0}) {
        const auto s = single_excitation_spectrum(dk, p);
        CHECK(labelled(s, BranchLabel::dark) == doctest::Approx(4.0 * dk).epsilon(1e-13).scale(1.0));
    }
    CHECK_THROWS_AS(dark_branch_group_velocity(p), Error);
}

TEST_CASE("group velocity from the spectrum")
{
    for (const double rho : {1e-4, 1e-2, 1.0, 30.0})
        for (const double delta : {0.0, 10.0, -3.0}) {
            const double g = 2.0;
            const auto p = make(1000.0, g, g * std::sqrt(rho), delta);
            const double expect = 1000.0 * rho / (1.0 + rho);
            CHECK(dark_branch_group_velocity(p) == doctest::Approx(expect).epsilon(1e-6));
            CHECK(vgr_quantum(0.0, p) == doctest::Approx(expect).epsilon(1e-14));
        }
}

TEST_CASE("quantum group velocity examples")
{
    const auto p = make(10.0, 1.0, 1.0, 0.0);  // rho = 1
    CHECK(vgr_quantum(1.0, p) == doctest::Approx(5.0 * (1.0 + 1.0 / std::sqrt(5.0))).epsilon(1e-15));
    CHECK(vgr_quantum(0.0, p) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(vgr_quantum(1e12, p) == doctest::Approx(10.0).epsilon(1e-10));
    CHECK_THROWS_AS(vgr_quantum(-1.0, p), Error);

    // small rho, P_S well below n: no cancellation loss
    const auto faint = make(1.0, 1.0, 1e-4, 0.0);
    const double rho = 1e-8;
    CHECK(vgr_quantum(0.0, faint) == doctest::Approx(rho / (1.0 + rho)).epsilon(1e-12));
}

TEST_CASE("quantum group velocity is increasing with the stated slope")
{
    const auto p = make(7.0, 1.0, 0.1, 0.0);
    double prev = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double ps = 0.003 * i;
        const double v = vgr_quantum(ps, p);
        CHECK(v > prev);
        CHECK(v < 7.0);
        prev = v;
        const double h = 1e-5;
        if (ps > h) {
            const double fd = (vgr_quantum(ps + h, p) - vgr_quantum(ps - h, p)) / (2.0 * h);
            CHECK(vgr_quantum_slope(ps, p) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("photon-intensity form agrees with the polariton-density form")
{
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> lg(-4.0, 3.0);
    for (int i = 0; i < 10000; ++i) {
        const double kappa = std::pow(10.0, lg(rng) / 2.0);
        const double oc = std::pow(10.0, lg(rng) / 2.0);
        const double n = std::pow(10.0, lg(rng) / 2.0);
        const auto p = make(3.0, kappa, oc, 0.0, n);
        const double j = std::pow(10.0, lg(rng)) * n;
        const double ps = polariton_density_from_photons(j, p);
        CHECK(j_of(ps, n, p.saturation_density()) == doctest::Approx(j).epsilon(1e-9));
        CHECK(vgr_kuang(j, p) == doctest::Approx(vgr_quantum(ps, p)).epsilon(1e-10));
    }
}

TEST_CASE("two-level model at zero offset")
{
    const double g = 2.0, oc = 1.0, delta = 20.0;
    const auto p = make(1.0, g, oc, delta);
    const auto m = adiabatic_two_level(0.0, p);
    CHECK(m.omega_minus == 0.0);
    CHECK(m.omega_plus == doctest::Approx((g * g + oc * oc) / delta).epsilon(1e-15));
    CHECK(std::tan(m.theta) == doctest::Approx(g / oc).epsilon(1e-14));

    const auto neg = adiabatic_two_level(0.0, make(1.0, g, oc, -delta));
    CHECK(neg.omega_minus == 0.0);
    CHECK(neg.omega_plus == doctest::Approx(-(g * g + oc * oc) / delta).epsilon(1e-15));

    CHECK_THROWS_AS(adiabatic_two_level(0.1, make(1.0, g, oc, 0.0)), Error);
}

TEST_CASE("two-level eigenvalues and Vieta")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double delta = (uni(rng) > 0.0 ? 1.0 : -1.0) * (5.0 + 50.0 * std::abs(uni(rng)));
        const auto p = make(1.0, 1.0 + std::abs(uni(rng)), 0.2 + std::abs(uni(rng)), delta);
        const double dw = uni(rng) * std::pow(10.0, 3.0 * uni(rng));
        const auto m = adiabatic_two_level(dw, p);
        const double g = p.collective_coupling(), oc = p.omega_c();
        const double scale = std::abs(dw) + (g * g + oc * oc) / std::abs(delta);
        CHECK(m.omega_plus + m.omega_minus == doctest::Approx(dw + (g * g + oc * oc) / delta).epsilon(1e-13).scale(scale));
        CHECK(m.omega_plus * m.omega_minus ==
              doctest::Approx(oc * oc * dw / delta).epsilon(1e-12).scale(scale * scale * 1e-3));
        // dark branch is the one on the far side of the detuning
        if (delta > 0.0)
            CHECK(m.omega_minus <= m.omega_plus);
        else
            CHECK(m.omega_minus >= m.omega_plus);

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(adiabatic_two_level_matrix(dw, p));
        const double lo = std::min(m.omega_plus, m.omega_minus);
        const double hi = std::max(m.omega_plus, m.omega_minus);
        CHECK(lo == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-12).scale(scale));
        CHECK(hi == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-12).scale(scale));
        CHECK(m.theta > 0.0);
        CHECK(m.theta < M_PI);
    }
}

TEST_CASE("two-level model tracks the three-level dark branch when far detuned")
{
    const double delta = 60.0;
    const auto p = make(1.0, 2.0, 1.0, delta);
    const double window = spectral_window(p, WindowRegime::far_detuned);
    std::vector<double> grid;
    for (int i = -40; i <= 40; ++i)
        grid.push_back(window * i / 40.0);
    const auto d = dispersion_curve(grid, p);
    REQUIRE(d.theta.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w3 = d.omega[static_cast<int>(BranchLabel::dark)][i];
        const double w2 = adiabatic_two_level(grid[i], p).omega_minus;
        CHECK(std::abs(w3 - w2) <= 0.01 * std::max(std::abs(w2), 1e-3 * window));
    }
}

TEST_CASE("dispersion curve agrees with pointwise continuation")
{
    const auto p = make(5.0, 1.0, 0.6, 1.5);
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i)
        grid.push_back(-2.0 + 0.02 * i);
    const auto d = dispersion_curve(grid, p);
    for (std::size_t i = 0; i < grid.size(); i += 17) {
        const auto s = single_excitation_spectrum(grid[i], p);
        for (const auto l : {BranchLabel::dark, BranchLabel::bright, BranchLabel::excited_like})
            CHECK(d.omega[static_cast<int>(l)][i] == doctest::Approx(labelled(s, l)).epsilon(1e-10).scale(1.0));
    }
    CHECK(dispersion_curve(grid, make(5.0, 1.0, 0.6, 0.0)).theta.empty());
}

TEST_CASE("coarse grid loses the branches")
{
    const auto p = make(1.0, 1.0, 0.1, 0.0);
    CHECK_THROWS_AS(dispersion_curve({0.0, 1e4}, p), Error);
    try {
        dispersion_curve({0.0, 1e4}, p);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::branch_tracking);
    }
    CHECK_THROWS_AS(dispersion_curve({1.0, 0.0}, p), Error);
}

TEST_CASE("classifier")
{
    const auto p = make(1.0, 2.0, 1.0, 50.0);
    const double w = spectral_window(p, WindowRegime::far_detuned);
    const auto c = dark_branch_classifier({0.01 * w, 100.0 * w, -100.0 * w}, p);
    REQUIRE(c.size() == 3);
    CHECK(c[0].cls == BranchClass::slow);
    CHECK(c[0].velocity_ratio == doctest::Approx(0.2).epsilon(0.02));
    CHECK(c[0].photon_overlap > 0.99);
    CHECK(c[1].cls != BranchClass::slow);
    CHECK(c[2].cls != BranchClass::slow);
    CHECK(c[2].cls == BranchClass::fast);

    // thresholds are honoured
    const auto strict = dark_branch_classifier({0.01 * w}, p, ClassifierThresholds{0.1, 0.9});
    CHECK(strict[0].cls == BranchClass::fast);

    CHECK_THROWS_AS(dark_branch_classifier({0.0}, make(1.0, 2.0, 1.0, 0.0)), Error);
}

} // TEST_SUITE
