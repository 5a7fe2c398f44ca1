#include <doctest.h>

#include "slowlight/darkstate.hpp"
#include "slowlight/errors.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cmath>
#include <random>

using namespace slowlight;

namespace {

using big = boost::multiprecision::cpp_int;
using rat = boost::rational<big>;

double to_double(const rat& r)
{
    return static_cast<double>(boost::multiprecision::cpp_rational(r.numerator(), r.denominator()));
}

big binom(long n, long k)
{
    big r = 1;
    for (long i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

big factorial(long n)
{
    big r = 1;
    for (long i = 2; i <= n; ++i)
        r *= i;
    return r;
}

// A(N, M) summed term by term in exact arithmetic
rat exact_a(long n, long m, const rat& xi)
{
    rat sum = 0;
    rat power = 1;
    for (long k = 0; k <= std::min(n, m); ++k) {
        sum += rat(binom(n, k) * binom(m, k) * factorial(k)) * power;
        power *= xi;
    }
    return sum;
}

// Y(N, M) from the diagonal recursion in exact arithmetic, seeded independently
rat exact_y_recursion(long n, long m, const rat& c)
{
    if (m == 1)
        return c / (rat(n) + c);
    if (n == 0)
        return rat(1);
    const rat prev = exact_y_recursion(n - 1, m - 1, c);
    const rat carried = rat(m - 1) * prev;
    return (c + carried) / (rat(n) + c + carried);
}

PhysicalParams with_a(double a)
{
    // a = Omega_C^2 / kappa^2 with kappa = 1
    return PhysicalParams::Builder{}.u(1.0).kappa(1.0).omega_c(std::sqrt(a)).n_1d(1.0).length(1.0).mode_area(1.0).build();
}

} // namespace

TEST_SUITE("darkstate") {

TEST_CASE("log A small cases")
{
    for (const double xi : {0.0, 0.3, 1.0, 17.0})
        CHECK(log_norm_a(1, 1, xi) == doctest::Approx(std::log1p(xi)).epsilon(1e-15));
    CHECK(log_norm_a(7, 0, 2.5) == 0.0);
    CHECK(log_norm_a(0, 9, 2.5) == 0.0);

    // 1 + 6/2 + 6/4 = 11/2
    const rat a = exact_a(3, 2, rat(1, 2));
    CHECK(a == rat(11, 2));
    CHECK(log_norm_a(3, 2, 0.5) == doctest::Approx(std::log(5.5)).epsilon(1e-15));
}

TEST_CASE("log A against exact sums")
{
    for (long n : {1L, 5L, 12L, 40L})
        for (long m : {1L, 3L, 12L, 55L})
            for (const rat xi : {rat(1, 100), rat(1, 3), rat(2), rat(25)}) {
                const rat a = exact_a(n, m, xi);
                const double expect = std::log(to_double(a));
                const double xi_d = to_double(xi);
                CHECK(log_norm_a(n, m, xi_d) == doctest::Approx(expect).epsilon(1e-13));
            }
}

TEST_CASE("log A stays finite where direct sums overflow")
{
    const double v = log_norm_a(2000, 2100, 1.0 / (1e-6 * 2000));
    CHECK(std::isfinite(v));
    CHECK(v > 700.0);  // exp(v) is beyond double range
}

TEST_CASE("log A rejects negative input")
{
    CHECK_THROWS_AS(log_norm_a(-1, 2, 1.0), Error);
    CHECK_THROWS_AS(log_norm_a(1, -2, 1.0), Error);
    CHECK_THROWS_AS(log_norm_a(1, 2, -1.0), Error);
}

TEST_CASE("y_exact matches the exact recursion and the exact A ratio")
{
    for (long n = 1; n <= 9; ++n)
        for (long m = 1; m <= 14; ++m)
            for (const rat c : {rat(1, 10), rat(1), rat(7, 2)}) {
                const rat y_rec = exact_y_recursion(n, m, c);
                const rat xi = rat(1) / c;
                const rat y_ratio = exact_a(n, m - 1, xi) / exact_a(n, m, xi);
                // recursion and ratio agree exactly, including M > N
                CHECK(y_rec == y_ratio);
                CHECK(y_exact(n, m, to_double(c)) == doctest::Approx(to_double(y_rec)).epsilon(1e-14));
            }
}

TEST_CASE("y_exact examples")
{
    CHECK(y_exact(1000, 1, 0.1) == doctest::Approx(0.1 / 1000.1).epsilon(1e-15));
    CHECK(y_exact(300, 120, 1e-14) < 1e-12);
    // Y(50, 20) against the log-domain ratio with xi = 1/c
    const double c = 1.0;
    const double ratio = std::exp(log_norm_a(50, 19, 1.0 / c) - log_norm_a(50, 20, 1.0 / c));
    CHECK(y_exact(50, 20, c) == doctest::Approx(ratio).epsilon(1e-12));
    CHECK_THROWS_AS(y_exact(0, 1, 1.0), Error);
    CHECK_THROWS_AS(y_exact(3, 0, 1.0), Error);
    CHECK_THROWS_AS(y_exact(3, 2, -1.0), Error);
}

TEST_CASE("Y is monotone in M and bounded")
{
    for (const double c : {0.01, 0.1, 1.0, 10.0})
        for (long n : {1L, 17L, 200L}) {
            double prev = 0.0;
            for (long m = 1; m <= 2 * n + 5; ++m) {
                const double y = y_exact(n, m, c);
                CHECK(y > 0.0);
                CHECK(y <= 1.0);
                CHECK(y >= prev);
                prev = y;
            }
        }
}

TEST_CASE("J closure examples")
{
    CHECK(j_of(0.0, 1.0, 0.3) == 0.0);
    // a = 0: J = max(P_S - P_Q, 0)
    CHECK(j_of(5.0, 2.0, 0.0) == doctest::Approx(3.0));
    CHECK(j_of(1.0, 2.0, 0.0) == 0.0);
    // P_S = P_Q + a: J = sqrt(a P_S)
    CHECK(j_of(2.5, 2.0, 0.5) == doctest::Approx(std::sqrt(0.5 * 2.5)).epsilon(1e-15));
    const auto p = with_a(0.5);
    CHECK(j_of(DensityPair{2.5, 2.0}, p) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-14));
}

TEST_CASE("J is the non-negative root and stays below P_S")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lg(-8.0, 4.0);
    for (int i = 0; i < 5000; ++i) {
        const double ps = std::pow(10.0, lg(rng));
        const double pq = std::pow(10.0, lg(rng));
        const double a = std::pow(10.0, lg(rng));
        const double j = j_of(ps, pq, a);
        CHECK(j >= 0.0);
        CHECK(j <= ps * (1.0 + 1e-15));
        // J^2 - (P_S - P_Q - a) J - a P_S = 0
        const double b = ps - pq - a;
        const double scale = std::max({j * j, std::abs(b * j), a * ps});
        CHECK(std::abs(j * j - b * j - a * ps) <= 1e-13 * scale);
        // inverse map
        CHECK(ps_of_j(j, pq, a) == doctest::Approx(ps).epsilon(1e-9));
    }
}

TEST_CASE("K limits and continuity at the switch")
{
    // P_S -> 0 reproduces the single-excitation ratio
    const double n = 1000.0, c = 0.1;
    CHECK(k_of(0.0, n, c) == doctest::Approx(c / (n + c)).epsilon(1e-15));
    CHECK(k_of(1e9, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-8));

    for (const double pq : {1e-6, 1.0, 1e3, 1e6})
        for (const double a : {1e-8, 1e-3, 1.0, 1e4}) {
            const double eps = k_limit_threshold(pq);
            const double below = k_of(eps * (1.0 - 1e-9), pq, a);
            const double at = k_of(eps, pq, a);
            CHECK(std::abs(at - below) <= 1e-10 * at);
        }
}

TEST_CASE("K satisfies its own fixed-point equation")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lg(-6.0, 3.0);
    for (int i = 0; i < 5000; ++i) {
        const double ps = std::pow(10.0, lg(rng));
        const double pq = std::pow(10.0, lg(rng));
        const double a = std::pow(10.0, lg(rng));
        const double k = k_of(ps, pq, a);
        CHECK(k > 0.0);
        CHECK(k <= 1.0);
        const double rhs = (a + ps * k) / (pq + a + ps * k);
        CHECK(std::abs(k - rhs) <= 1e-12 * k);
    }
}

TEST_CASE("D_K vanishes at M = 1")
{
    for (long n : {1L, 10L, 1000L, 2000L})
        for (const double c : {1e-3, 0.1, 2.0, 50.0})
            CHECK(dk_error(n, 1, c) == 0.0);
    const auto p = PhysicalParams::Builder{}.u(1.0).kappa(1.0).omega_c(1e-3).n_1d(1.0).length(1000.0).mode_area(1.0).build();
    CHECK(dk_error(1000, 1, p) == 0.0);
}

TEST_CASE("D_K curve is the pointwise difference")
{
    const auto curve = dk_curve(100, 0.01, 250);
    REQUIRE(curve.size() == 250);
    for (const auto& pt : curve) {
        CHECK(pt.d_k == pt.y_exact - pt.k_approx);
        CHECK(pt.m_ratio == doctest::Approx(static_cast<double>(pt.m_pol - 1) / 100.0));
        CHECK(pt.d_k == dk_error(100, pt.m_pol, 0.01));
    }
    CHECK_THROWS_AS(dk_curve(100, 0.01, 0), Error);
}

TEST_CASE("D_K peak near M - 1 = N with size of order 1/N")
{
    for (long n : {1000L, 2000L}) {
        const auto curve = dk_curve(n, 1e-6 * static_cast<double>(n), 2 * n);
        double best = 0.0, at = 0.0;
        for (const auto& pt : curve)
            if (std::abs(pt.d_k) > best) {
                best = std::abs(pt.d_k);
                at = pt.m_ratio;
            }
        CHECK(std::abs(at - 1.0) < 0.05);
        CHECK(best * static_cast<double>(n) > 0.2);
        CHECK(best * static_cast<double>(n) < 5.0);
    }
}

TEST_CASE("D_K with coupling off")
{
    const auto p = PhysicalParams::Builder{}.u(1.0).kappa(0.0).omega_c(1.0).n_1d(1.0).length(1.0).mode_area(1.0).build();
    CHECK_THROWS_AS(dk_error(10, 2, p), Error);
}

TEST_CASE("dark_state_coeffs bundles the normalisation")
{
    const auto d = dark_state_coeffs(3, 2, 0.5);
    CHECK(d.n_atoms == 3);
    CHECK(d.m_pol == 2);
    CHECK(d.log_norm == doctest::Approx(std::log(5.5)));
}

} // TEST_SUITE
