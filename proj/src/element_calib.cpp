#include "wbcal/element_calib.hpp"

#include "wbcal/coupling_update.hpp"
#include "wbcal/kernels.hpp"

#include <algorithm>

namespace wbcal {

GammaUpdate solve_gamma_bs(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup, bool parallel)
{
    const ArrayErrorSet& bs = st.errors_bs;
    const ArrayErrorSet& ue = st.errors_ue;
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    const int Q = meas.schedule.Q(), np = meas.schedule.n_p, nrf = meas.beams.n_rrf();
    const int dim = setup.arrays.bs.size();
    std::vector<cmat> wc(np);
    for (int p = 0; p < np; ++p) wc[p] = meas.beams.W[p] * bs.coupling;

    auto chunk = [&](int c) {
        const int m = c / Q, q = c % Q;
        kernels::NormalEq ne{cmat::Zero(dim, dim), cvec::Zero(dim)};
        const FrameEstimate& f = st.frames[m];
        if (f.size() == 0) return ne;
        const int k = meas.schedule.carriers[q];
        const cmat ar = steering_matrix(f.vr_x, f.vr_y, k, setup.arrays.bs, bs.spacing, setup.freq);
        const cmat at_h = steering_matrix(f.vt_x, f.vt_y, k, setup.arrays.ue, ue.spacing, setup.freq).adjoint();
        const cvec z = f.z(k, setup.freq);
        for (int p = 0; p < np; ++p) {
            const cvec x = ar * z.cwiseProduct(at_h * ops.s_tilde[p]);
            const cmat t = wc[p] * x.asDiagonal();
            ne.G.noalias() += t.adjoint() * t;
            ne.h.noalias() += t.adjoint() * meas.y[m].segment(meas.offset(q, p), nrf);
        }
        return ne;
    };
    const int chunks = static_cast<int>(st.frames.size()) * Q;
    const kernels::NormalEq ne = parallel ? kernels::reduce_parallel(chunks, dim, chunk)
                                          : kernels::reduce_serial(chunks, dim, chunk);
    GammaUpdate out;
    out.gamma = solve_hermitian_floor(ne.G, ne.h, out.flagged);
    return out;
}

GammaUpdate solve_gamma_ue(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup, bool parallel)
{
    const ArrayErrorSet& bs = st.errors_bs;
    const ArrayErrorSet& ue = st.errors_ue;
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    const int Q = meas.schedule.Q(), np = meas.schedule.n_p, nrf = meas.beams.n_rrf();
    const int dim = setup.arrays.ue.size();
    // w_p = C_t^H F_p q_p
    std::vector<cvec> w(np);
    for (int p = 0; p < np; ++p) w[p] = ue.coupling.adjoint() * meas.beams.s[p];

    auto chunk = [&](int c) {
        const int m = c / Q, q = c % Q;
        kernels::NormalEq ne{cmat::Zero(dim, dim), cvec::Zero(dim)};
        const FrameEstimate& f = st.frames[m];
        if (f.size() == 0) return ne;
        const int k = meas.schedule.carriers[q];
        const cmat ar = steering_matrix(f.vr_x, f.vr_y, k, setup.arrays.bs, bs.spacing, setup.freq);
        const cmat at_h = steering_matrix(f.vt_x, f.vt_y, k, setup.arrays.ue, ue.spacing, setup.freq).adjoint();
        const cvec z = f.z(k, setup.freq);
        for (int p = 0; p < np; ++p) {
            const cmat r = (ops.wcg[p] * ar) * z.asDiagonal() * at_h;
            const cmat t = r * w[p].asDiagonal();
            ne.G.noalias() += t.adjoint() * t;
            ne.h.noalias() += t.adjoint() * meas.y[m].segment(meas.offset(q, p), nrf);
        }
        return ne;
    };
    const int chunks = static_cast<int>(st.frames.size()) * Q;
    const kernels::NormalEq ne = parallel ? kernels::reduce_parallel(chunks, dim, chunk)
                                          : kernels::reduce_serial(chunks, dim, chunk);
    GammaUpdate out;
    out.gamma = solve_hermitian_floor(ne.G, ne.h, out.flagged).conjugate();
    return out;
}

SpacingGradient grad_spacing(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup, bool parallel)
{
    const ErrorOps ops = build_error_ops(st.errors_bs, st.errors_ue, meas.beams);
    const int M = static_cast<int>(st.frames.size());
    std::vector<SpacingGradient> parts(M, SpacingGradient::zeros(setup.arrays));
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int m = 0; m < M; ++m)
        frame_gradient(st.frames[m], st.errors_bs, st.errors_ue, ops, meas, m, setup, &parts[m]);
    SpacingGradient g = SpacingGradient::zeros(setup.arrays);
    for (const auto& p : parts) {
        g.r_x += p.r_x;
        g.r_y += p.r_y;
        g.t_x += p.t_x;
        g.t_y += p.t_y;
    }
    return g;
}

double global_objective_par(const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                            const std::vector<FrameEstimate>& frames, const MeasurementSet& meas,
                            const Setup& setup, bool parallel)
{
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    const int M = static_cast<int>(frames.size());
    std::vector<double> parts(M, 0.0);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int m = 0; m < M; ++m) parts[m] = frame_residual(frames[m], bs, ue, ops, meas, m, setup);
    double acc = 0;
    for (double v : parts) acc += v;
    return acc;
}

SpacingStep update_spacing(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup, Side side,
                           const SpacingGradient& grad, const LineSearchConfig& ls, double& step_memory,
                           double bound, bool parallel)
{
    const bool bs_side = side == Side::BS;
    const ArrayErrorSet& cur = bs_side ? st.errors_bs : st.errors_ue;
    const ArrayGeometry& geom = bs_side ? setup.arrays.bs : setup.arrays.ue;
    SpacingStep out{cur.spacing, global_objective_par(st.errors_bs, st.errors_ue, st.frames, meas, setup, parallel),
                    false};

    rvec dx = -(bs_side ? grad.r_x : grad.t_x);
    rvec dy = -(bs_side ? grad.r_y : grad.t_y);
    // element 0 of each axis is the phase reference and never moves
    const double mx = std::max(dx.size() ? dx.cwiseAbs().maxCoeff() : 0.0, dy.size() ? dy.cwiseAbs().maxCoeff() : 0.0);
    if (!(mx > 0)) return out;
    dx /= mx;
    dy /= mx;

    const double lam = setup.freq.lambda_c();
    const double init = ls.step_spacing * lam;
    double& step = step_memory;
    if (step <= 0) step = init;
    ArrayErrorSet cand = cur;
    double s = step;
    const double f0 = out.objective;
    for (int t = 0; t < ls.t_bct; ++t) {
        for (int i = 0; i < geom.n_x; ++i)
            cand.spacing.eps_x[i] = std::clamp(cur.spacing.eps_x[i] + s * dx[i], -bound * geom.d_x, bound * geom.d_x);
        for (int j = 0; j < geom.n_y; ++j)
            cand.spacing.eps_y[j] = std::clamp(cur.spacing.eps_y[j] + s * dy[j], -bound * geom.d_y, bound * geom.d_y);
        const double f = bs_side ? global_objective_par(cand, st.errors_ue, st.frames, meas, setup, parallel)
                                 : global_objective_par(st.errors_bs, cand, st.frames, meas, setup, parallel);
        if (f < f0) {
            out.spacing = cand.spacing;
            out.objective = f;
            out.moved = true;
            step = std::min(s / ls.beta, ls.growth_cap * init);
            return out;
        }
        s *= ls.beta;
    }
    step = std::max(s, 1e-12 * init);
    return out;
}

}  // namespace wbcal
