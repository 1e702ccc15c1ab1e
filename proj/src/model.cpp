#include "wbcal/model.hpp"

namespace wbcal {

FrameEstimate FrameEstimate::empty()
{
    return {rvec(0), rvec(0), rvec(0), rvec(0), rvec(0), cvec(0)};
}

cvec FrameEstimate::z(int k, const FrequencyGrid& freq) const
{
    return delay_response(tau, k, freq).cwiseProduct(alpha);
}

ErrorOps build_error_ops(const ArrayErrorSet& bs, const ArrayErrorSet& ue, const WhitenedBeams& beams)
{
    ErrorOps ops;
    const cmat cg_r = bs.coupling * bs.gamma.asDiagonal();
    const cmat cg_t_h = (ue.coupling * ue.gamma.asDiagonal()).adjoint();
    for (int p = 0; p < beams.n_p(); ++p) {
        ops.wcg.push_back(beams.W[p] * cg_r);
        ops.s_tilde.push_back(cg_t_h * beams.s[p]);
    }
    return ops;
}

cmat steering_matrix(const rvec& vx, const rvec& vy, int k, const ArrayGeometry& geom, const SpacingErrors& eps,
                     const FrequencyGrid& freq)
{
    const int L = static_cast<int>(vx.size());
    const double kap = freq.wavenumber(k);
    const rvec px = axis_positions(geom.n_x, geom.d_x, eps.eps_x);
    const rvec py = axis_positions(geom.n_y, geom.d_y, eps.eps_y);
    cmat a(geom.size(), L);
    for (int l = 0; l < L; ++l)
        for (int j = 0; j < geom.n_y; ++j)
            for (int i = 0; i < geom.n_x; ++i)
                a(i + geom.n_x * j, l) = std::polar(1.0, kap * (px[i] * vx[l] + py[j] * vy[l]));
    return a;
}

CarrierTerms carrier_terms(const FrameEstimate& f, int k, const ErrorOps& ops, const ArrayErrorSet& bs,
                           const ArrayErrorSet& ue, const Setup& setup)
{
    CarrierTerms t;
    t.k = k;
    t.Ar = steering_matrix(f.vr_x, f.vr_y, k, setup.arrays.bs, bs.spacing, setup.freq);
    t.At = steering_matrix(f.vt_x, f.vt_y, k, setup.arrays.ue, ue.spacing, setup.freq);
    const int np = static_cast<int>(ops.wcg.size());
    t.E.resize(np);
    t.G.resize(f.size(), np);
    const cmat at_h = t.At.adjoint();
    for (int p = 0; p < np; ++p) {
        t.E[p].noalias() = ops.wcg[p] * t.Ar;
        t.G.col(p).noalias() = at_h * ops.s_tilde[p];
    }
    t.z = f.z(k, setup.freq);
    return t;
}

cmat assemble_T_alpha(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                      const MeasurementSet& meas, const Setup& setup)
{
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    const int nrf = meas.beams.n_rrf();
    cmat t(meas.frame_length(), f.size());
    for (int q = 0; q < meas.schedule.Q(); ++q) {
        const int k = meas.schedule.carriers[q];
        const CarrierTerms ct = carrier_terms(f, k, ops, bs, ue, setup);
        const cvec b = delay_response(f.tau, k, setup.freq);
        for (int p = 0; p < meas.schedule.n_p; ++p)
            t.middleRows(meas.offset(q, p), nrf) = ct.E[p] * ct.G.col(p).cwiseProduct(b).asDiagonal();
    }
    return t;
}

double frame_residual(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                      const ErrorOps& ops, const MeasurementSet& meas, int m, const Setup& setup)
{
    const int nrf = meas.beams.n_rrf();
    const cvec& y = meas.y[m];
    if (f.size() == 0) return y.squaredNorm();
    double acc = 0;
    for (int q = 0; q < meas.schedule.Q(); ++q) {
        const CarrierTerms ct = carrier_terms(f, meas.schedule.carriers[q], ops, bs, ue, setup);
        for (int p = 0; p < meas.schedule.n_p; ++p) {
            const cvec pred = ct.E[p] * ct.G.col(p).cwiseProduct(ct.z);
            acc += (y.segment(meas.offset(q, p), nrf) - pred).squaredNorm();
        }
    }
    return acc;
}

double global_objective(const ArrayErrorSet& bs, const ArrayErrorSet& ue, const std::vector<FrameEstimate>& frames,
                        const MeasurementSet& meas, const Setup& setup)
{
    require(frames.size() == meas.y.size(), "global_objective: frame count mismatch");
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    double acc = 0;
    for (size_t m = 0; m < frames.size(); ++m)
        acc += frame_residual(frames[m], bs, ue, ops, meas, static_cast<int>(m), setup);
    return acc;
}

double global_objective(const EstimatorState& st, const MeasurementSet& meas, const Setup& setup)
{
    return global_objective(st.errors_bs, st.errors_ue, st.frames, meas, setup);
}

ChannelTensor reconstruct_channel(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                                  const Setup& setup)
{
    const int nr = setup.arrays.bs.size(), nt = setup.arrays.ue.size();
    ChannelTensor h(setup.freq.K);
    const cmat cg_r = bs.coupling * bs.gamma.asDiagonal();
    const cmat cg_t = ue.coupling * ue.gamma.asDiagonal();
    for (int k = 0; k < setup.freq.K; ++k) {
        if (f.size() == 0) {
            h[k] = cmat::Zero(nr, nt);
            continue;
        }
        const cmat ar = cg_r * steering_matrix(f.vr_x, f.vr_y, k, setup.arrays.bs, bs.spacing, setup.freq);
        const cmat at = cg_t * steering_matrix(f.vt_x, f.vt_y, k, setup.arrays.ue, ue.spacing, setup.freq);
        h[k] = ar * f.z(k, setup.freq).asDiagonal() * at.adjoint();
    }
    return h;
}

}  // namespace wbcal
