#include "wbcal/estimator.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace wbcal {

void AlgoConfig::validate() const
{
    require(t_iter >= 0, "T_iter must be >= 0");
    require(ls.t_bct >= 1, "T_bct must be >= 1");
    require(ls.beta > 0 && ls.beta < 1, "line-search shrink factor must be in (0,1)");
    require(th1 > 0 && th2 > 0, "Th1 and Th2 must be positive");
    require(l_hat >= 1, "L_hat must be >= 1");
    require(lambda_r >= 0 && lambda_t >= 0, "coupling penalties must be nonnegative");
    require(grid.g_rx >= 1 && grid.g_ry >= 1 && grid.g_tx >= 1 && grid.g_ty >= 1 && grid.g_tau >= 1,
            "grid counts must be >= 1");
}

double delta_F(const std::vector<double>& history)
{
    require(history.size() >= 2, "delta_F needs two entries");
    const double prev = history[history.size() - 2];
    const double cur = history.back();
    if (prev == 0) return 0.0;
    return std::abs(cur - prev) / prev;
}

FrameEstimate genie_frame(const PathSet& truth, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                          const MeasurementSet& meas, int m, const Setup& setup)
{
    FrameEstimate f{truth.vr_x, truth.vr_y, truth.vt_x, truth.vt_y, truth.tau, cvec::Zero(truth.size())};
    const cmat t = assemble_T_alpha(f, bs, ue, meas, setup);
    f.alpha = solve_alpha(meas.y[m], t).alpha;
    return f;
}

ChannelTensor genie_ls_baseline(const MeasurementSet& meas, const PathSet& truth_last_frame,
                                const ArrayErrorSet& bs, const ArrayErrorSet& ue, const Setup& setup)
{
    const int m = static_cast<int>(meas.y.size()) - 1;
    const FrameEstimate f = genie_frame(truth_last_frame, bs, ue, meas, m, setup);
    return reconstruct_channel(f, bs, ue, setup);
}

EstimatorState initial_state(const Setup& setup, int frames)
{
    EstimatorState st;
    st.errors_bs = ArrayErrorSet::ideal(setup.arrays.bs);
    st.errors_ue = ArrayErrorSet::ideal(setup.arrays.ue);
    st.frames.assign(frames, FrameEstimate::empty());
    st.frame_steps.assign(frames, StepMemory{});
    return st;
}

void ongrid_frames(EstimatorState& st, const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg)
{
    const Dictionary dict = build_dictionary(cfg.grid, st.errors_bs, st.errors_ue, meas, setup, cfg.dict);
    const int M = static_cast<int>(meas.y.size());
    const int L = static_cast<int>(std::min<long long>(cfg.l_hat, dict.columns()));
    st.frames.resize(M);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int m = 0; m < M; ++m) {
        const SupportEstimate s = omp_solve(meas.y[m], dict, L, cfg.parallel);
        st.frames[m] = support_to_frame(s, dict);
    }
}

namespace {

void offgrid_frames(EstimatorState& st, const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg)
{
    const int M = static_cast<int>(st.frames.size());
    st.frame_steps.resize(M);
    std::vector<char> flags(M, 0);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int m = 0; m < M; ++m) {
        RefineResult r = refine_frame(st.frames[m], st.errors_bs, st.errors_ue, meas, m, setup, cfg.ls,
                                      st.frame_steps[m]);
        st.frames[m] = std::move(r.frame);
        flags[m] = r.flagged;
    }
    for (char f : flags) st.flagged_solves += f;
}

double objective(const EstimatorState& st, const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg)
{
    return global_objective_par(st.errors_bs, st.errors_ue, st.frames, meas, setup, cfg.parallel);
}

}  // namespace

void calibration_pass(EstimatorState& st, const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg,
                      int iteration, const StageObserver& observe)
{
    auto note = [&](const char* stage) {
        if (observe) observe(iteration, stage, st, objective(st, meas, setup, cfg));
    };
    const bool approx = st.coupling_mode == CouplingMode::Approx;
    const CouplingLayout lay_r(setup.arrays.bs, approx ? cfg.radii_bs : CouplingRadii{});
    const CouplingLayout lay_t(setup.arrays.ue, approx ? cfg.radii_ue : CouplingRadii{});

    CouplingUpdate cr = solve_u_bs(meas, st, setup, lay_r, cfg.lambda_r, cfg.parallel);
    st.errors_bs.coupling = cr.C;
    st.flagged_solves += cr.flagged;
    note("coupling_bs");
    CouplingUpdate ct = solve_u_ue(meas, st, setup, lay_t, cfg.lambda_t, cfg.parallel);
    st.errors_ue.coupling = ct.C;
    st.flagged_solves += ct.flagged;
    note("coupling_ue");

    GammaUpdate gr = solve_gamma_bs(meas, st, setup, cfg.parallel);
    st.errors_bs.gamma = gr.gamma;
    st.flagged_solves += gr.flagged;
    note("gamma_bs");
    GammaUpdate gt = solve_gamma_ue(meas, st, setup, cfg.parallel);
    st.errors_ue.gamma = gt.gamma;
    st.flagged_solves += gt.flagged;
    note("gamma_ue");

    SpacingGradient g = grad_spacing(meas, st, setup, cfg.parallel);
    SpacingStep sb = update_spacing(meas, st, setup, Side::BS, g, cfg.ls, st.spacing_step_bs, cfg.spacing_bound,
                                    cfg.parallel);
    st.errors_bs.spacing = sb.spacing;
    note("spacing_bs");
    g = grad_spacing(meas, st, setup, cfg.parallel);
    SpacingStep su = update_spacing(meas, st, setup, Side::UE, g, cfg.ls, st.spacing_step_ue, cfg.spacing_bound,
                                    cfg.parallel);
    st.errors_ue.spacing = su.spacing;
    note("spacing_ue");
}

EstimationResult run_estimation(const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg,
                                std::optional<EstimatorState> start, const StageObserver& observe)
{
    cfg.validate();
    const int M = static_cast<int>(meas.y.size());
    EstimatorState st = start ? std::move(*start) : initial_state(setup, M);
    st.frame_steps.resize(M);
    st.errors_bs.validate(setup.arrays.bs);
    st.errors_ue.validate(setup.arrays.ue);

    bool fresh_frames = false;
    const bool have_frames = static_cast<int>(st.frames.size()) == M &&
                             std::all_of(st.frames.begin(), st.frames.end(), [](const FrameEstimate& f) { return f.size() > 0; });
    if (!have_frames) {
        ongrid_frames(st, meas, setup, cfg);
        fresh_frames = true;
    }
    if (st.objective_history.empty()) st.objective_history.push_back(objective(st, meas, setup, cfg));

    for (int t = st.iterations + 1; t <= cfg.t_iter; ++t) {
        if (!fresh_frames) {
            if (st.phase == Phase::OnGrid)
                ongrid_frames(st, meas, setup, cfg);
            else
                offgrid_frames(st, meas, setup, cfg);
            if (observe) observe(t, st.phase == Phase::OnGrid ? "ongrid" : "offgrid", st, objective(st, meas, setup, cfg));
        }
        fresh_frames = false;

        if (cfg.calibrate) calibration_pass(st, meas, setup, cfg, t, observe);

        st.objective_history.push_back(objective(st, meas, setup, cfg));
        st.iterations = t;
        const double dF = delta_F(st.objective_history);
        if (st.phase == Phase::OnGrid) {
            if (cfg.allow_offgrid && dF <= cfg.th1) {
                st.phase = Phase::OffGrid;
                spdlog::debug("iteration {}: switching to off-grid refinement", t);
            }
        } else if (cfg.calibrate && cfg.use_approx && st.coupling_mode == CouplingMode::ToeplitzOnly && dF <= cfg.th2) {
            st.coupling_mode = CouplingMode::Approx;
            spdlog::debug("iteration {}: approximate coupling model enabled", t);
        } else if (cfg.early_exit > 0 && st.phase == Phase::OffGrid && dF < cfg.early_exit) {
            break;
        }
    }
    if (st.flagged_solves > 0) spdlog::debug("{} solves needed regularisation", st.flagged_solves);

    EstimationResult res;
    res.channel = reconstruct_channel(st.frames.back(), st.errors_bs, st.errors_ue, setup);
    res.state = std::move(st);
    return res;
}

}  // namespace wbcal
