#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

#include "wbcal/io.hpp"

#include <filesystem>

using namespace wbcal;

TEST_CASE("vector and matrix conversions")
{
    Rng rng(1);
    const cvec v = tu::rand_cvec(rng, 4);
    CHECK((io::cvec_from_json(io::to_json(v)) - v).norm() == 0.0);
    const rvec r = rvec::Random(3);
    CHECK((io::rvec_from_json(io::to_json(r)) - r).norm() == 0.0);
    const cmat m = tu::rand_cmat(rng, 3, 2);
    const auto j = io::to_json(m);
    CHECK(j.size() == 3);
    CHECK(j[0].size() == 2);
    CHECK(j[0][1][1].get<double>() == m(0, 1).imag());
    CHECK((io::cmat_from_json(j) - m).norm() == 0.0);
}

TEST_CASE("measurement set and state round trip through files")
{
    Rng rng(2);
    tu::InstanceSpec sp;
    sp.sigma2 = 0.1;
    const tu::Instance in = tu::make_instance(rng, sp);
    const auto dir = std::filesystem::temp_directory_path() / "wbcal_test_io";
    std::filesystem::create_directories(dir);

    const std::string mp = (dir / "meas.json").string();
    io::save_measurements(in.meas, mp);
    const MeasurementSet back = io::load_measurements(mp);
    CHECK(back.sigma2 == in.meas.sigma2);
    CHECK(back.schedule.carriers == in.meas.schedule.carriers);
    CHECK(back.schedule.n_p == in.meas.schedule.n_p);
    REQUIRE(back.y.size() == in.meas.y.size());
    for (size_t m = 0; m < back.y.size(); ++m) CHECK((back.y[m] - in.meas.y[m]).norm() == 0.0);
    for (int p = 0; p < sp.n_p; ++p) {
        CHECK((back.beams.W[p] - in.meas.beams.W[p]).norm() == 0.0);
        CHECK((back.beams.D[p] - in.meas.beams.D[p]).norm() == 0.0);
        CHECK((back.beams.s[p] - in.meas.beams.s[p]).norm() == 0.0);
    }

    EstimatorState st = initial_state(in.setup, sp.M);
    st.errors_bs = in.bs;
    st.errors_ue = in.ue;
    for (size_t m = 0; m < in.paths.size(); ++m) st.frames[m] = tu::frame_from_paths(in.paths[m]);
    st.objective_history = {3.0, 2.5, 2.25};
    st.phase = Phase::OffGrid;
    st.coupling_mode = CouplingMode::Approx;
    st.iterations = 2;
    st.spacing_step_bs = 1e-4;
    st.frame_steps[1].angle = 0.02;
    st.flagged_solves = 1;
    const std::string cp = (dir / "state.json").string();
    io::save_checkpoint(st, cp);
    const EstimatorState s2 = io::load_checkpoint(cp);
    CHECK((s2.errors_bs.coupling - st.errors_bs.coupling).norm() == 0.0);
    CHECK((s2.errors_ue.gamma - st.errors_ue.gamma).norm() == 0.0);
    CHECK((s2.errors_bs.spacing.eps_x - st.errors_bs.spacing.eps_x).norm() == 0.0);
    CHECK(s2.objective_history == st.objective_history);
    CHECK(s2.phase == Phase::OffGrid);
    CHECK(s2.coupling_mode == CouplingMode::Approx);
    CHECK(s2.iterations == 2);
    CHECK(s2.spacing_step_bs == 1e-4);
    CHECK(s2.frame_steps[1].angle == 0.02);
    CHECK(s2.flagged_solves == 1);
    REQUIRE(s2.frames.size() == st.frames.size());
    CHECK((s2.frames[0].tau - st.frames[0].tau).norm() == 0.0);
    CHECK((s2.frames[1].alpha - st.frames[1].alpha).norm() == 0.0);
    CHECK(global_objective(s2, back, in.setup) == global_objective(st, in.meas, in.setup));

    // a resumed run continues from the checkpointed iteration
    AlgoConfig a;
    a.grid = GridSpec::defaults(in.setup.arrays, sp.n_cp, in.setup.tau_max);
    a.t_iter = 3;
    a.parallel = false;
    const EstimationResult r = run_estimation(back, in.setup, a, s2);
    CHECK(r.state.iterations == 3);
    CHECK(r.state.objective_history.size() == 4);

    CHECK_THROWS(io::load_checkpoint(mp));
    std::filesystem::remove_all(dir);
}
