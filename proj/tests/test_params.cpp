#include <doctest.h>

#include "slowlight/errors.hpp"
#include "slowlight/params.hpp"

#include <cmath>

using namespace slowlight;

namespace {

PhysicalParams::Builder base()
{
    return PhysicalParams::Builder{}
        .u(100.0)
        .kappa(2.2)
        .omega_c(3.0)
        .n_1d(1.0)
        .length(5000.0)
        .delta(0.5)
        .gamma(16.4)
        .mode_area(3.0)
        .sigma0(0.15);
}

ErrorKind kind_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::config;
}

} // namespace

TEST_SUITE("params") {

TEST_CASE("rho from its definition")
{
    const auto p = base().build();
    // 9 / 4.84, worked by hand
    CHECK(derived_rho(p) == doctest::Approx(1.859504132231405).epsilon(1e-14));

    const auto equal = base().omega_c(2.2).build();
    CHECK(derived_rho(equal) == doctest::Approx(1.0).epsilon(1e-15));

    const auto faint = base().omega_c(1e-6).build();
    CHECK(derived_rho(faint) < 1e-12);
}

TEST_CASE("rho needs coupling")
{
    const auto p = base().kappa(0.0).build();
    CHECK(kind_of([&] { derived_rho(p); }) == ErrorKind::coupling_off);
    CHECK(std::isinf(p.saturation_density()));
}

TEST_CASE("optical density and Beer length")
{
    const auto p = base().build();
    CHECK(optical_density(p) == doctest::Approx(250.0).epsilon(1e-14));
    CHECK(beer_length(p) == doctest::Approx(20.0).epsilon(1e-14));

    const auto one = base().length(20.0).build();
    CHECK(optical_density(one) == doctest::Approx(1.0).epsilon(1e-14));

    const auto dense = base().n_1d(2.0).build();
    CHECK(optical_density(dense) == doctest::Approx(2.0 * optical_density(p)).epsilon(1e-14));

    const auto none = base().sigma0(0.0).build();
    CHECK(kind_of([&] { optical_density(none); }) == ErrorKind::no_absorption_data);
}

TEST_CASE("spectral windows")
{
    const auto p = base().build();
    const double g2 = 2.2 * 2.2;
    CHECK(spectral_window(p, WindowRegime::far_detuned) == doctest::Approx((g2 + 9.0) / 0.5));

    const auto far = base().delta(1.0).build();
    const auto farther = base().delta(-2.0).build();
    CHECK(spectral_window(farther, WindowRegime::far_detuned) ==
          doctest::Approx(0.5 * spectral_window(far, WindowRegime::far_detuned)));

    const auto dark = base().omega_c(1e-9).build();
    CHECK(spectral_window(dark, WindowRegime::far_detuned) == doctest::Approx(g2 / 0.5).epsilon(1e-12));

    // s = 4 and Omega_C = gamma gives W = gamma / 2
    const auto four = base().length(80.0).omega_c(16.4).build();
    CHECK(spectral_window(four, WindowRegime::dense) == doctest::Approx(8.2).epsilon(1e-14));
    const auto thin = base().length(20.0).build();
    CHECK(kind_of([&] { spectral_window(thin, WindowRegime::dense); }) == ErrorKind::missing_parameter);

    const auto resonant = base().delta(0.0).build();
    CHECK(kind_of([&] { spectral_window(resonant, WindowRegime::far_detuned); }) == ErrorKind::missing_parameter);
    const auto cold = base().gamma(0.0).build();
    CHECK(kind_of([&] { spectral_window(cold, WindowRegime::dense); }) == ErrorKind::missing_parameter);
}

TEST_CASE("builder rejects bad fields")
{
    CHECK(kind_of([] { base().u(0.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().kappa(-1.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().omega_c(0.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().n_1d(0.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().length(-5.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().gamma(-1.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().mode_area(0.0).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().sigma0(-0.1).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { base().u(std::nan("")).build(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] {
              PhysicalParams::Builder{}.u(1.0).omega_c(1.0).n_1d(1.0).length(1.0).mode_area(1.0).build();
          }) == ErrorKind::missing_parameter);
    CHECK(kind_of([] { base().dipole(1e-29, 2e15).build(); }) == ErrorKind::invalid_argument);
}

TEST_CASE("dipole route")
{
    // Cs D2: d ~ 2.69e-29 C m (stretched transition), omega0 = 2 pi 351.7 THz
    const double d = 2.69e-29;
    const double w0 = 2.0 * M_PI * 351.7e12;
    const double kappa = coupling_from_dipole(d, w0, 3.0);
    // independent SI evaluation: hbar, eps0 from CODATA
    const double hbar = 1.054571817e-34, eps0 = 8.8541878128e-12;
    const double si = d * std::sqrt(w0 / (2.0 * hbar * eps0 * 3.0e-12));  // s^-1 m^1/2
    CHECK(kappa == doctest::Approx(si * 1e-6 * 1e3).epsilon(1e-12));

    const auto built = PhysicalParams::Builder{}
                           .u(1.0)
                           .omega_c(3.0)
                           .n_1d(1.0)
                           .length(1.0)
                           .mode_area(3.0)
                           .dipole(d, w0)
                           .build();
    CHECK(built.kappa() == doctest::Approx(kappa).epsilon(1e-15));
}

TEST_CASE("time rescaling moves every frequency by 1/alpha")
{
    const auto p = base().build();
    for (const double alpha : {0.1, 1.0, 10.0}) {
        // t -> alpha t: frequencies and velocities / alpha, kappa / alpha
        const auto q = base()
                           .u(100.0 / alpha)
                           .kappa(2.2 / alpha)
                           .omega_c(3.0 / alpha)
                           .delta(0.5 / alpha)
                           .gamma(16.4 / alpha)
                           .build();
        CHECK(derived_rho(q) == doctest::Approx(derived_rho(p)).epsilon(1e-13));
        CHECK(optical_density(q) == doctest::Approx(optical_density(p)).epsilon(1e-13));
        CHECK(spectral_window(q, WindowRegime::far_detuned) ==
              doctest::Approx(spectral_window(p, WindowRegime::far_detuned) / alpha).epsilon(1e-13));
        CHECK(spectral_window(q, WindowRegime::dense) ==
              doctest::Approx(spectral_window(p, WindowRegime::dense) / alpha).epsilon(1e-13));
        CHECK(q.collective_coupling() == doctest::Approx(p.collective_coupling() / alpha).epsilon(1e-13));
    }
}

TEST_CASE("rho invariant under joint scaling of kappa and Omega_C")
{
    const auto p = base().build();
    for (const double c : {1e-3, 0.5, 7.0, 1e4}) {
        const auto q = base().kappa(2.2 * c).omega_c(3.0 * c).build();
        CHECK(derived_rho(q) == doctest::Approx(derived_rho(p)).epsilon(1e-13));
    }
}

TEST_CASE("params are copied out of the builder")
{
    const auto p = base().build();
    const auto q = p.to_builder().omega_c(1.0).build();
    CHECK(q.omega_c() == 1.0);
    CHECK(p.omega_c() == 3.0);
    CHECK(q.kappa() == p.kappa());
    CHECK(q.atom_number() == doctest::Approx(5000.0));
}

} // TEST_SUITE
