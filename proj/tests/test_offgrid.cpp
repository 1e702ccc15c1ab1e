#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "checks.hpp"

using namespace wbcal;

TEST_CASE("solve_alpha examples")
{
    Rng rng(1);
    const cvec y = tu::rand_cvec(rng, 5);
    CHECK((solve_alpha(y, cmat::Identity(5, 5)).alpha - y).norm() < 1e-14);

    const cvec t = tu::rand_cvec(rng, 7);
    const AlphaSolution s = solve_alpha(2.0 * t, t);
    CHECK(std::abs(s.alpha[0] - cd(2.0)) < 1e-14);
    CHECK_FALSE(s.flagged);

    const cmat a = tu::rand_cmat(rng, 20, 4);
    const cvec b = tu::rand_cvec(rng, 20);
    const cvec ne = (a.adjoint() * a).ldlt().solve(a.adjoint() * b);
    const AlphaSolution r = solve_alpha(b, a);
    CHECK(tu::rel_err(r.alpha, ne) < 1e-8);
    CHECK((a.adjoint() * (b - a * r.alpha)).norm() < 1e-8 * b.norm());

    cmat dup(20, 2);
    dup.col(0) = a.col(0);
    dup.col(1) = a.col(0);
    const AlphaSolution d = solve_alpha(b, dup);
    CHECK(d.flagged);
    CHECK(std::abs(d.alpha[0] - d.alpha[1]) < 1e-10);  // minimum norm splits evenly
}

TEST_CASE("gains_to_z and objective_frame")
{
    Rng rng(2);
    const FrequencyGrid f(50e9, 2.5e9, 16);
    const cvec alpha = tu::rand_cvec(rng, 3);
    CHECK((gains_to_z(alpha, rvec::Zero(3), 5, f) - alpha).norm() == 0.0);
    const rvec tau = rvec::Random(3).cwiseAbs() * 3e-9;
    const cvec z = gains_to_z(alpha, tau, 9, f);
    for (int l = 0; l < 3; ++l) {
        CHECK(std::abs(z[l]) == doctest::Approx(std::abs(alpha[l])));
        CHECK(std::abs(z[l] - alpha[l] * std::exp(cd(0, -2 * kPi * f.delta_f[9] * tau[l]))) < 1e-13);
    }

    tu::InstanceSpec sp;
    sp.M = 1;
    sp.sigma2 = 0.05;
    tu::Instance in = tu::make_instance(rng, sp);
    const FrameEstimate fr = tu::frame_from_paths(in.paths[0]);
    const cmat t = assemble_T_alpha(fr, in.bs, in.ue, in.meas, in.setup);
    const cvec& y = in.meas.y[0];
    // explicit projector oracle
    const cmat proj = t * (t.adjoint() * t).inverse() * t.adjoint();
    const double want = (y - proj * y).squaredNorm();
    CHECK(objective_frame(fr, in.bs, in.ue, in.meas, 0, in.setup) == doctest::Approx(want).epsilon(1e-9));

    // y in the span gives zero, y orthogonal to it gives ||y||^2
    in.meas.y[0] = t * tu::rand_cvec(rng, 2);
    CHECK(objective_frame(fr, in.bs, in.ue, in.meas, 0, in.setup) < 1e-20 * in.meas.y[0].squaredNorm() + 1e-24);
    const cvec w = tu::rand_cvec(rng, y.size());
    in.meas.y[0] = w - proj * w;
    CHECK(objective_frame(fr, in.bs, in.ue, in.meas, 0, in.setup) ==
          doctest::Approx(in.meas.y[0].squaredNorm()).epsilon(1e-9));
}

TEST_CASE("assemble_T_z: Kronecker oracle, shapes and zero pilot")
{
    Rng rng(3);
    tu::InstanceSpec sp;
    sp.M = 1;
    sp.L = 1;
    sp.errors = false;
    tu::Instance in = tu::make_instance(rng, sp);
    const FrameEstimate f = tu::frame_from_paths(in.paths[0]);
    const auto blocks = assemble_T_z(f, in.bs, in.ue, in.meas, in.setup);
    REQUIRE(static_cast<int>(blocks.size()) == sp.Q * sp.n_p);
    const Setup& s = in.setup;
    for (const TzBlock& b : blocks) {
        CHECK(b.Tz.rows() == 2);
        CHECK(b.Tz.cols() == 1);
        const int k = in.meas.schedule.carriers[b.q];
        const cvec ar = tu::steer_oracle(f.vr_x[0], f.vr_y[0], k, s.arrays.bs, in.bs.spacing, s.freq);
        const cvec at = tu::steer_oracle(f.vt_x[0], f.vt_y[0], k, s.arrays.ue, in.ue.spacing, s.freq);
        // Phi_p (conj(a_t) kron a_r) = W_p a_r a_t^H s_p
        cvec kr(ar.size() * at.size());
        for (int c = 0; c < at.size(); ++c) kr.segment(c * ar.size(), ar.size()) = std::conj(at[c]) * ar;
        CHECK(tu::rel_err(cvec(b.Tz.col(0)), in.meas.beams.phi(b.p) * kr) < 1e-12);
    }

    // zero pilot symbol
    for (auto& s2 : in.meas.beams.s) s2.setZero();
    for (const TzBlock& b : assemble_T_z(f, in.bs, in.ue, in.meas, in.setup)) CHECK(b.Tz.norm() == 0.0);
}

TEST_CASE("gradients match central differences")
{
    const checks::GradientResult r = checks::gradients(8, 4);
    for (const auto& [fam, err] : r.worst) {
        INFO(fam);
        CHECK(err < 1e-4);
    }
    CHECK(r.y_zero_on_ula);
    CHECK(r.reference_zero);
}

TEST_CASE("gradients vanish at the noiseless optimum")
{
    Rng rng(5);
    tu::InstanceSpec sp;
    sp.nr_x = 4;
    sp.nr_y = 2;
    sp.M = 1;
    const tu::Instance in = tu::make_instance(rng, sp);
    const FrameEstimate f = tu::frame_from_paths(in.paths[0]);
    const ErrorOps ops = build_error_ops(in.bs, in.ue, in.meas.beams);
    const FrameGradient g = frame_gradient(f, in.bs, in.ue, ops, in.meas, 0, in.setup);
    const double scale = in.meas.y[0].squaredNorm();
    CHECK(g.vr_x.norm() <= 1e-6 * scale);
    CHECK(g.vr_y.norm() <= 1e-6 * scale);
    CHECK(g.vt_x.norm() <= 1e-6 * scale);
    CHECK(g.tau.norm() * in.setup.tau_max <= 1e-6 * scale);

    // the split accessors agree with the combined gradient
    CHECK((grad_angles_bs(f, in.bs, in.ue, in.meas, 0, in.setup).vr_x - g.vr_x).norm() == 0.0);
    CHECK((grad_angles_ue(f, in.bs, in.ue, in.meas, 0, in.setup).vt_x - g.vt_x).norm() == 0.0);
    CHECK((grad_delay(f, in.bs, in.ue, in.meas, 0, in.setup) - g.tau).norm() == 0.0);
}

TEST_CASE("delay gradient vanishes with a single zero-offset carrier")
{
    Rng rng(6);
    tu::InstanceSpec sp;
    sp.K = 2;  // delta_f[1] = 0
    sp.Q = 2;
    sp.M = 1;
    sp.sigma2 = 0.1;
    tu::Instance in = tu::make_instance(rng, sp);
    const PilotSchedule one{{1}, sp.n_p, 1};
    const MeasurementSet ms = simulate_measurements(in.channels, in.raw, in.meas.beams, one, 0.1, rng);
    FrameEstimate f = tu::frame_from_paths(in.paths[0]);
    f.tau.array() += 1e-10;
    CHECK(grad_delay(f, in.bs, in.ue, ms, 0, in.setup).norm() == 0.0);
}

TEST_CASE("refine_frame: decreasing sweeps, zero gradient, ranges")
{
    Rng rng(7);
    tu::InstanceSpec sp;
    sp.M = 1;
    sp.L = 1;
    tu::Instance in = tu::make_instance(rng, sp);
    FrameEstimate f = tu::frame_from_paths(in.paths[0]);
    f.vr_x[0] += 0.01;
    f.vt_x[0] -= 0.01;
    f.tau[0] = std::clamp(f.tau[0] + 0.05 * in.setup.tau_max, 0.0, in.setup.tau_max);
    f.alpha = solve_alpha(in.meas.y[0], assemble_T_alpha(f, in.bs, in.ue, in.meas, in.setup)).alpha;
    const ErrorOps ops = build_error_ops(in.bs, in.ue, in.meas.beams);
    double prev = frame_residual(f, in.bs, in.ue, ops, in.meas, 0, in.setup);
    StepMemory mem;
    const LineSearchConfig ls;
    for (int sweep = 0; sweep < 10; ++sweep) {
        const RefineResult r = refine_frame(f, in.bs, in.ue, in.meas, 0, in.setup, ls, mem);
        if (sweep == 0) CHECK(r.objective < prev);
        CHECK(r.objective <= prev);
        CHECK(r.objective == doctest::Approx(frame_residual(r.frame, in.bs, in.ue, ops, in.meas, 0, in.setup)));
        for (double v : {r.frame.vr_x[0], r.frame.vt_x[0]}) {
            CHECK(v >= -1.0);
            CHECK(v < 1.0);
        }
        CHECK(r.frame.tau[0] >= 0.0);
        CHECK(r.frame.tau[0] <= in.setup.tau_max);
        CHECK(mem.angle <= ls.growth_cap * ls.step_angle);
        prev = r.objective;
        f = r.frame;
    }

    // at the noiseless optimum nothing moves
    const FrameEstimate exact = tu::frame_from_paths(in.paths[0]);
    StepMemory m2;
    const RefineResult same = refine_frame(exact, in.bs, in.ue, in.meas, 0, in.setup, ls, m2);
    CHECK(same.objective <= 1e-20 * in.meas.y[0].squaredNorm() + 1e-28);
}

TEST_CASE("closed-form gains are locally optimal")
{
    Rng rng(8);
    tu::InstanceSpec sp;
    sp.M = 1;
    sp.sigma2 = 0.1;
    tu::Instance in = tu::make_instance(rng, sp);
    FrameEstimate f = tu::frame_from_paths(in.paths[0]);
    f.alpha = solve_alpha(in.meas.y[0], assemble_T_alpha(f, in.bs, in.ue, in.meas, in.setup)).alpha;
    const ErrorOps ops = build_error_ops(in.bs, in.ue, in.meas.beams);
    const double base = frame_residual(f, in.bs, in.ue, ops, in.meas, 0, in.setup);
    for (int t = 0; t < 10; ++t) {
        FrameEstimate g = f;
        g.alpha += 1e-4 * tu::rand_cvec(rng, f.size());
        CHECK(frame_residual(g, in.bs, in.ue, ops, in.meas, 0, in.setup) > base);
    }
}
