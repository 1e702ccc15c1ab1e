#include "wbcal/offgrid.hpp"

#include <Eigen/QR>
#include <algorithm>

namespace wbcal {

std::vector<TzBlock> assemble_T_z(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                                  const MeasurementSet& meas, const Setup& setup)
{
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    std::vector<TzBlock> out;
    for (int q = 0; q < meas.schedule.Q(); ++q) {
        const CarrierTerms ct = carrier_terms(f, meas.schedule.carriers[q], ops, bs, ue, setup);
        for (int p = 0; p < meas.schedule.n_p; ++p) {
            TzBlock b;
            b.q = q;
            b.p = p;
            b.tz = ct.G.col(p);
            b.Tz = ct.E[p] * b.tz.asDiagonal();
            out.push_back(std::move(b));
        }
    }
    return out;
}

AlphaSolution solve_alpha(const cvec& y, const cmat& T_alpha)
{
    require(T_alpha.rows() == y.size(), "solve_alpha: row mismatch");
    AlphaSolution s;
    if (T_alpha.cols() == 0) return s;
    Eigen::CompleteOrthogonalDecomposition<cmat> cod(T_alpha);
    cod.setThreshold(1e-12);
    s.flagged = cod.rank() < T_alpha.cols();
    s.alpha = cod.solve(y);
    return s;
}

cvec gains_to_z(const cvec& alpha, const rvec& tau, int k, const FrequencyGrid& freq)
{
    return delay_response(tau, k, freq).cwiseProduct(alpha);
}

double objective_frame(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                       const MeasurementSet& meas, int m, const Setup& setup)
{
    const cvec& y = meas.y[m];
    if (f.size() == 0) return y.squaredNorm();
    const cmat t = assemble_T_alpha(f, bs, ue, meas, setup);
    const AlphaSolution a = solve_alpha(y, t);
    return (y - t * a.alpha).squaredNorm();
}

SpacingGradient SpacingGradient::zeros(const ArrayPair& arrays)
{
    return {rvec::Zero(arrays.bs.n_x), rvec::Zero(arrays.bs.n_y), rvec::Zero(arrays.ue.n_x),
            rvec::Zero(arrays.ue.n_y)};
}

FrameGradient frame_gradient(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                             const ErrorOps& ops, const MeasurementSet& meas, int m, const Setup& setup,
                             SpacingGradient* spacing)
{
    const int L = f.size();
    FrameGradient g{rvec::Zero(L), rvec::Zero(L), rvec::Zero(L), rvec::Zero(L), rvec::Zero(L)};
    if (L == 0) return g;
    const ArrayGeometry& gr = setup.arrays.bs;
    const ArrayGeometry& gt = setup.arrays.ue;
    const rvec prx = axis_positions(gr.n_x, gr.d_x, bs.spacing.eps_x);
    const rvec pry = axis_positions(gr.n_y, gr.d_y, bs.spacing.eps_y);
    const rvec ptx = axis_positions(gt.n_x, gt.d_x, ue.spacing.eps_x);
    const rvec pty = axis_positions(gt.n_y, gt.d_y, ue.spacing.eps_y);
    const int nrf = meas.beams.n_rrf();
    const cvec& y = meas.y[m];

    for (int q = 0; q < meas.schedule.Q(); ++q) {
        const int k = meas.schedule.carriers[q];
        const CarrierTerms ct = carrier_terms(f, k, ops, bs, ue, setup);
        const double kap = setup.freq.wavenumber(k);
        const double dfk = setup.freq.delta_f[k];
        for (int p = 0; p < meas.schedule.n_p; ++p) {
            const cvec gp = ct.G.col(p);
            const cvec r = y.segment(meas.offset(q, p), nrf) - ct.E[p] * gp.cwiseProduct(ct.z);
            const cvec h = ops.wcg[p].adjoint() * r;  // back-projected residual at the BS antennas
            const cvec& st = ops.s_tilde[p];
            for (int l = 0; l < L; ++l) {
                const cd c = ct.z[l] * gp[l];
                const cd rho = ct.E[p].col(l).dot(r);  // r^H e_l conjugated: e_l^H r
                // d(pred)/d(theta) = e_l * c * dphase  => dF = -2 Re(r^H ...)
                cd sx{}, sy{};
                cd ux{}, uy{};
                for (int j = 0; j < gr.n_y; ++j)
                    for (int i = 0; i < gr.n_x; ++i) {
                        const int idx = i + gr.n_x * j;
                        const cd w = std::conj(h[idx]) * ct.Ar(idx, l);
                        sx += w * prx[i];
                        sy += w * pry[j];
                    }
                for (int j = 0; j < gt.n_y; ++j)
                    for (int i = 0; i < gt.n_x; ++i) {
                        const int idx = i + gt.n_x * j;
                        const cd w = std::conj(ct.At(idx, l)) * st[idx];
                        ux += w * ptx[i];
                        uy += w * pty[j];
                    }
                const cd jk = kJ * kap;
                g.vr_x[l] += -2.0 * std::real(c * jk * sx);
                g.vr_y[l] += -2.0 * std::real(c * jk * sy);
                // dg/dv = -j kap sum conj(a) pos s_tilde; r^H e_l = conj(rho)
                g.vt_x[l] += -2.0 * std::real(std::conj(rho) * ct.z[l] * (-jk) * ux);
                g.vt_y[l] += -2.0 * std::real(std::conj(rho) * ct.z[l] * (-jk) * uy);
                g.tau[l] += -2.0 * std::real(std::conj(rho) * c * (-2.0 * kPi * kJ * dfk));

                if (spacing) {
                    for (int j = 0; j < gr.n_y; ++j)
                        for (int i = 0; i < gr.n_x; ++i) {
                            const int idx = i + gr.n_x * j;
                            const cd w = c * jk * std::conj(h[idx]) * ct.Ar(idx, l);
                            spacing->r_x[i] += -2.0 * std::real(w * double(i) * f.vr_x[l]);
                            spacing->r_y[j] += -2.0 * std::real(w * double(j) * f.vr_y[l]);
                        }
                    for (int j = 0; j < gt.n_y; ++j)
                        for (int i = 0; i < gt.n_x; ++i) {
                            const int idx = i + gt.n_x * j;
                            const cd w = std::conj(rho) * ct.z[l] * (-jk) * std::conj(ct.At(idx, l)) * st[idx];
                            spacing->t_x[i] += -2.0 * std::real(w * double(i) * f.vt_x[l]);
                            spacing->t_y[j] += -2.0 * std::real(w * double(j) * f.vt_y[l]);
                        }
                }
            }
        }
    }
    return g;
}

FrameGradient grad_angles_bs(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                             const MeasurementSet& meas, int m, const Setup& setup)
{
    FrameGradient g = frame_gradient(f, bs, ue, build_error_ops(bs, ue, meas.beams), meas, m, setup);
    g.vt_x.setZero();
    g.vt_y.setZero();
    g.tau.setZero();
    return g;
}

FrameGradient grad_angles_ue(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                             const MeasurementSet& meas, int m, const Setup& setup)
{
    FrameGradient g = frame_gradient(f, bs, ue, build_error_ops(bs, ue, meas.beams), meas, m, setup);
    g.vr_x.setZero();
    g.vr_y.setZero();
    g.tau.setZero();
    return g;
}

rvec grad_delay(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                const MeasurementSet& meas, int m, const Setup& setup)
{
    return frame_gradient(f, bs, ue, build_error_ops(bs, ue, meas.beams), meas, m, setup).tau;
}

namespace {

// largest |entry| of the preconditioned direction is scaled to 1
double normalise(std::vector<rvec*> parts)
{
    double mx = 0;
    for (auto* v : parts)
        if (v->size()) mx = std::max(mx, v->cwiseAbs().maxCoeff());
    if (mx > 0)
        for (auto* v : parts) *v /= mx;
    return mx;
}

template <class Apply>
bool backtrack(double f0, double& step, double init, const LineSearchConfig& ls, Apply try_step, double& f_new)
{
    if (step <= 0) step = init;
    double s = step;
    for (int t = 0; t < ls.t_bct; ++t) {
        const double f = try_step(s);
        if (f < f0) {
            f_new = f;
            step = std::min(s / ls.beta, ls.growth_cap * init);
            return true;
        }
        s *= ls.beta;
    }
    step = std::max(s, 1e-12 * init);
    return false;
}

}  // namespace

RefineResult refine_frame(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                          const MeasurementSet& meas, int m, const Setup& setup, const LineSearchConfig& ls,
                          StepMemory& mem)
{
    RefineResult res{f, 0, false};
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    FrameEstimate& cur = res.frame;
    double f0 = frame_residual(cur, bs, ue, ops, meas, m, setup);
    res.objective = f0;
    const int L = cur.size();
    if (L == 0) return res;

    rvec prec(L);
    for (int l = 0; l < L; ++l) prec[l] = 1.0 / std::max(std::norm(cur.alpha[l]), 1e-300);

    // angles, gains held fixed
    {
        FrameGradient g = frame_gradient(cur, bs, ue, ops, meas, m, setup);
        rvec dx = -g.vr_x.cwiseProduct(prec), dy = -g.vr_y.cwiseProduct(prec);
        rvec ex = -g.vt_x.cwiseProduct(prec), ey = -g.vt_y.cwiseProduct(prec);
        if (normalise({&dx, &dy, &ex, &ey}) > 0) {
            FrameEstimate cand = cur;
            auto apply = [&](double s) {
                for (int l = 0; l < L; ++l) {
                    cand.vr_x[l] = wrap_unit(cur.vr_x[l] + s * dx[l]);
                    cand.vr_y[l] = wrap_unit(cur.vr_y[l] + s * dy[l]);
                    cand.vt_x[l] = wrap_unit(cur.vt_x[l] + s * ex[l]);
                    cand.vt_y[l] = wrap_unit(cur.vt_y[l] + s * ey[l]);
                }
                return frame_residual(cand, bs, ue, ops, meas, m, setup);
            };
            double fn = f0;
            if (backtrack(f0, mem.angle, ls.step_angle, ls, apply, fn)) {
                cur = cand;
                f0 = fn;
            }
        }
    }

    // delays
    {
        const rvec g = frame_gradient(cur, bs, ue, ops, meas, m, setup).tau;
        rvec d = -g.cwiseProduct(prec);
        if (normalise({&d}) > 0 && setup.tau_max > 0) {
            FrameEstimate cand = cur;
            auto apply = [&](double s) {
                for (int l = 0; l < L; ++l) cand.tau[l] = std::clamp(cur.tau[l] + s * d[l], 0.0, setup.tau_max);
                return frame_residual(cand, bs, ue, ops, meas, m, setup);
            };
            double fn = f0;
            if (backtrack(f0, mem.delay, ls.step_delay * setup.tau_max, ls, apply, fn)) {
                cur = cand;
                f0 = fn;
            }
        }
    }

    // gains in closed form; kept only if the truncated pseudo-inverse did not lose ground
    {
        const cmat t = assemble_T_alpha(cur, bs, ue, meas, setup);
        const AlphaSolution a = solve_alpha(meas.y[m], t);
        res.flagged = a.flagged;
        FrameEstimate cand = cur;
        cand.alpha = a.alpha;
        const double fn = frame_residual(cand, bs, ue, ops, meas, m, setup);
        if (fn <= f0) {
            cur = cand;
            f0 = fn;
        }
    }
    res.objective = f0;
    return res;
}

}  // namespace wbcal
