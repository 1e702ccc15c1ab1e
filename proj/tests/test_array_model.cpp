#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace wbcal;

namespace {

const FrequencyGrid kFreq(50e9, 2.5e9, 64);
const double kLam = kFreq.lambda_c();

}  // namespace

TEST_CASE("steering_axis: zero spatial frequency gives all ones")
{
    const rvec eps = rvec::Random(6) * 0.05 * kLam;
    const cvec a = steering_axis(0.0, 7, 6, kLam / 2, eps, kFreq);
    CHECK((a - cvec::Ones(6)).norm() < 1e-15);
}

TEST_CASE("steering_axis: half-wave endfire")
{
    // K = 2 puts delta_f[1] at 0
    const FrequencyGrid f(50e9, 2.5e9, 2);
    REQUIRE(f.delta_f[1] == 0.0);
    const cvec a = steering_axis(1.0, 1, 2, f.lambda_c() / 2, rvec::Zero(2), f);
    CHECK(std::abs(a[0] - cd(1, 0)) < 1e-12);
    CHECK(std::abs(a[1] - cd(-1, 0)) < 1e-12);
}

TEST_CASE("steering_axis: squint phases match scalar evaluation")
{
    // B = 0.1 f_c and K = 4 put delta_f[3] at B/4 = 0.025 f_c
    const double fc = 40e9;
    const FrequencyGrid f(fc, 0.1 * fc, 4);
    REQUIRE(std::abs(f.delta_f[3] / fc - 0.025) < 1e-15);
    const cvec a = steering_axis(0.5, 3, 4, f.lambda_c() / 2, rvec::Zero(4), f);
    for (int i = 0; i < 4; ++i) {
        const double ph = i * kPi * 0.5 * 1.025;
        CHECK(std::abs(a[i] - cd(std::cos(ph), std::sin(ph))) < 1e-12);
    }
}

TEST_CASE("steering_axis: unit modulus and dimension checks")
{
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 50; ++t) {
        const rvec eps = rvec::Random(9) * 0.1 * kLam;
        const cvec a = steering_axis(u(rng), t % kFreq.K, 9, kLam / 2, eps, kFreq);
        CHECK((a.cwiseAbs() - rvec::Ones(9)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(steering_axis(0.1, 0, 4, kLam / 2, rvec::Zero(3), kFreq), InvalidArgument);
    CHECK_THROWS_AS(steering_axis(0.1, 64, 4, kLam / 2, rvec::Zero(4), kFreq), InvalidArgument);
}

TEST_CASE("steering_axis: inter-element increment scales with 1 + df/f_c")
{
    const double v = 0.3;
    for (int k = 0; k < kFreq.K; ++k) {
        const cvec a = steering_axis(v, k, 2, kLam / 2, rvec::Zero(2), kFreq);
        const double inc = std::arg(a[1]);
        CHECK(inc == doctest::Approx(kPi * v * (1 + kFreq.delta_f[k] / kFreq.f_c)).epsilon(1e-12));
    }
}

TEST_CASE("steering_upa: ULA degeneration, broadside and index-wise product")
{
    Rng rng(5);
    const ArrayGeometry ula = ArrayGeometry::half_wave(6, 1, kLam, Side::BS);
    SpacingErrors e{rvec::Random(6) * 0.05 * kLam, rvec::Zero(1)};
    CHECK((steering_upa(0.4, 0.9, 2, ula, e, kFreq) - steering_axis(0.4, 2, 6, ula.d_x, e.eps_x, kFreq)).norm() ==
          0.0);

    const ArrayGeometry upa = ArrayGeometry::half_wave(3, 2, kLam, Side::UE);
    SpacingErrors e2{rvec::Random(3) * 0.05 * kLam, rvec::Random(2) * 0.05 * kLam};
    CHECK((steering_upa(0, 0, 1, upa, e2, kFreq) - cvec::Ones(6)).norm() < 1e-15);

    const cvec a = steering_upa(0.2, -0.7, 9, upa, e2, kFreq);
    const cvec ax = steering_axis(0.2, 9, 3, upa.d_x, e2.eps_x, kFreq);
    const cvec ay = steering_axis(-0.7, 9, 2, upa.d_y, e2.eps_y, kFreq);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 3; ++i) {
            CHECK(a[i + 3 * j] == ax[i] * ay[j]);
            CHECK(std::abs(a[i + 3 * j] - tu::steer_entry(i, j, 0.2, -0.7, 9, upa, e2, kFreq)) < 1e-12);
        }
}

TEST_CASE("effective_steering: identity, uniform gain, dense oracle")
{
    Rng rng(7);
    const ArrayGeometry g = ArrayGeometry::half_wave(4, 2, kLam, Side::BS);
    ArrayErrorSet e = ArrayErrorSet::ideal(g);
    const cvec ideal = steering_upa(0.3, 0.1, 4, g, e.spacing, kFreq);
    CHECK((effective_steering(0.3, 0.1, 4, e, g, kFreq) - ideal).norm() < 1e-15);
    e.gamma = cvec::Constant(8, 2.0);
    CHECK((effective_steering(0.3, 0.1, 4, e, g, kFreq) - 2.0 * ideal).norm() < 1e-14);

    e = generate_array_errors(rng, g, ErrorConfig{}, kLam);
    const cvec a = steering_upa(0.3, 0.1, 4, g, e.spacing, kFreq);
    cvec oracle = cvec::Zero(8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) oracle[r] += e.coupling(r, c) * e.gamma[c] * a[c];
    CHECK(tu::rel_err(effective_steering(0.3, 0.1, 4, e, g, kFreq), oracle) < 1e-13);

    e.gamma.resize(7);
    CHECK_THROWS_AS(effective_steering(0.3, 0.1, 4, e, g, kFreq), InvalidArgument);
}

TEST_CASE("coupling coefficient model")
{
    const cd c0 = std::polar(0.2, kPi / 3);
    const cd c1 = coupling_coefficient(1.0, c0);
    CHECK(std::abs(c1 - c0) < 1e-15);
    const cd c2 = coupling_coefficient(2.0, c0);
    CHECK(std::abs(c2) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(std::arg(c2) == doctest::Approx(kPi / 3 - kPi / 8).epsilon(1e-14));

    // two elements half a wavelength apart
    const ArrayGeometry g = ArrayGeometry::half_wave(2, 1, kLam, Side::BS);
    ErrorConfig ec;
    ec.gain_std = ec.phase_std = ec.eps_half_width = 0;
    Rng rng(1);
    const ArrayErrorSet e = generate_array_errors(rng, g, ec, kLam);
    CHECK(std::abs(e.coupling(0, 1) - c0) < 1e-15);
}

TEST_CASE("generate_array_errors: zero variance and structure")
{
    Rng rng(11);
    ErrorConfig ec;
    ec.gain_std = ec.phase_std = ec.eps_half_width = 0;
    const ArrayGeometry ula = ArrayGeometry::half_wave(8, 1, kLam, Side::BS);
    const ArrayErrorSet e = generate_array_errors(rng, ula, ec, kLam);
    CHECK((e.gamma - cvec::Ones(8)).norm() == 0.0);
    CHECK(e.spacing.eps_x.norm() == 0.0);
    // eps = 0 on a ULA: symmetric Toeplitz
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            CHECK(std::abs(e.coupling(i, j) - e.coupling(j, i)) == 0.0);
            if (i > 0 && j > 0) CHECK(std::abs(e.coupling(i, j) - e.coupling(i - 1, j - 1)) < 1e-15);
        }

    // default config on a UPA: symmetric, unit diagonal, spacing within bounds
    const ArrayGeometry upa = ArrayGeometry::half_wave(4, 3, kLam, Side::BS);
    for (int t = 0; t < 20; ++t) {
        const ArrayErrorSet r = generate_array_errors(rng, upa, ErrorConfig{}, kLam);
        CHECK((r.coupling - r.coupling.transpose()).norm() == 0.0);
        CHECK((r.coupling.diagonal() - cvec::Ones(12)).norm() == 0.0);
        CHECK(r.spacing.eps_x.cwiseAbs().maxCoeff() <= 0.1 * kLam);
        CHECK(r.spacing.eps_y.cwiseAbs().maxCoeff() <= 0.1 * kLam);
        CHECK(r.gamma.cwiseAbs().minCoeff() > 0);
    }
}

TEST_CASE("generate_array_errors: coupling follows the perturbed positions")
{
    Rng rng(13);
    const ArrayGeometry g = ArrayGeometry::half_wave(5, 1, kLam, Side::UE);
    const ErrorConfig ec;
    const ArrayErrorSet e = generate_array_errors(rng, g, ec, kLam);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            if (a == b) continue;
            const double pa = a * g.d_x + e.spacing.eps_x[a], pb = b * g.d_x + e.spacing.eps_x[b];
            const double r = std::abs(pa - pb) / (kLam / 2);
            const cd want = ec.c0 / r * std::exp(cd(0, -(r - 1) * kPi / 8));
            CHECK(std::abs(e.coupling(a, b) - want) < 1e-14);
        }
    ErrorConfig nominal;
    nominal.perturbed_distances = false;
    const ArrayErrorSet n = generate_array_errors(rng, g, nominal, kLam);
    CHECK(std::abs(n.coupling(0, 2) - coupling_coefficient(2.0, nominal.c0)) < 1e-14);
}

TEST_CASE("angles_to_spatial stays in range")
{
    Rng rng(17);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int t = 0; t < 1000; ++t) {
        const auto [vx, vy] = angles_to_spatial(u(rng), u(rng));
        CHECK(std::abs(vx) <= 1.0);
        CHECK(std::abs(vy) <= 1.0);
    }
}
