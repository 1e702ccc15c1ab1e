#include "wbcal/coupling_update.hpp"

#include "wbcal/kernels.hpp"

#include <Eigen/Eigenvalues>

namespace wbcal {

cvec solve_hermitian_floor(const cmat& G, const cvec& h, bool& flagged)
{
    flagged = false;
    if (G.rows() == 0) return cvec(0);
    Eigen::SelfAdjointEigenSolver<cmat> es(G);
    const rvec& ev = es.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    const double floor = 1e-12 * top;
    rvec inv(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] > floor && top > 0) {
            inv[i] = 1.0 / ev[i];
        } else {
            inv[i] = 0.0;
            flagged = true;
        }
    }
    return es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().adjoint() * h);
}

namespace {

cmat penalty_gram(const CouplingLayout& lay, double lambda)
{
    const Eigen::SparseMatrix<double> s = build_regularizer(lay);
    const rmat sd = rmat(s);
    return (lambda * sd.transpose() * sd).cast<cd>();
}

}  // namespace

double coupling_penalty(const cmat& C, const CouplingLayout& lay, double lambda)
{
    if (lambda == 0) return 0;
    const cvec u = params_from_matrix(C, lay).stacked();
    const Eigen::SparseMatrix<double> s = build_regularizer(lay);
    return lambda * (s.cast<cd>() * u).squaredNorm();
}

CouplingUpdate solve_u_bs(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                          const CouplingLayout& lay, double lambda, bool parallel)
{
    const ArrayErrorSet& bs = st.errors_bs;
    const ArrayErrorSet& ue = st.errors_ue;
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    const int Q = meas.schedule.Q(), np = meas.schedule.n_p, nrf = meas.beams.n_rrf();
    const int dim = lay.q_total();
    const int chunks = static_cast<int>(st.frames.size()) * Q;

    auto chunk = [&](int c) {
        const int m = c / Q, q = c % Q;
        kernels::NormalEq ne{cmat::Zero(dim, dim), cvec::Zero(dim)};
        const FrameEstimate& f = st.frames[m];
        if (f.size() == 0) return ne;
        const int k = meas.schedule.carriers[q];
        const cmat ar = bs.gamma.asDiagonal() * steering_matrix(f.vr_x, f.vr_y, k, setup.arrays.bs, bs.spacing, setup.freq);
        const cmat at = steering_matrix(f.vt_x, f.vt_y, k, setup.arrays.ue, ue.spacing, setup.freq);
        const cvec z = f.z(k, setup.freq);
        for (int p = 0; p < np; ++p) {
            const cvec t = ar * z.cwiseProduct(at.adjoint() * ops.s_tilde[p]);
            const cmat wq = meas.beams.W[p] * build_Q(t, lay);
            const cvec d = meas.y[m].segment(meas.offset(q, p), nrf) - meas.beams.W[p] * t;
            ne.G.noalias() += wq.adjoint() * wq;
            ne.h.noalias() += wq.adjoint() * d;
        }
        return ne;
    };
    kernels::NormalEq ne = parallel ? kernels::reduce_parallel(chunks, dim, chunk)
                                    : kernels::reduce_serial(chunks, dim, chunk);
    if (lambda != 0) ne.G += penalty_gram(lay, lambda);

    CouplingUpdate out;
    const cvec u = solve_hermitian_floor(ne.G, ne.h, out.flagged);
    out.u = CouplingParams::split(u, lay);
    out.C = reconstruct_matrix(out.u, lay);
    return out;
}

CouplingUpdate solve_u_ue(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                          const CouplingLayout& lay, double lambda, bool parallel)
{
    const ArrayErrorSet& bs = st.errors_bs;
    const ArrayErrorSet& ue = st.errors_ue;
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    const int Q = meas.schedule.Q(), np = meas.schedule.n_p, nrf = meas.beams.n_rrf();
    const int dim = lay.q_total();
    const int chunks = static_cast<int>(st.frames.size()) * Q;

    // Q_t(F_p q_p) is shared by every frame and carrier
    std::vector<cmat> qs(np);
    for (int p = 0; p < np; ++p) qs[p] = build_Q(meas.beams.s[p], lay);

    auto chunk = [&](int c) {
        const int m = c / Q, q = c % Q;
        kernels::NormalEq ne{cmat::Zero(dim, dim), cvec::Zero(dim)};
        const FrameEstimate& f = st.frames[m];
        if (f.size() == 0) return ne;
        const int k = meas.schedule.carriers[q];
        const cmat ar = steering_matrix(f.vr_x, f.vr_y, k, setup.arrays.bs, bs.spacing, setup.freq);
        const cmat atg_h = (ue.gamma.asDiagonal() *
                            steering_matrix(f.vt_x, f.vt_y, k, setup.arrays.ue, ue.spacing, setup.freq))
                               .adjoint();
        const cvec z = f.z(k, setup.freq);
        for (int p = 0; p < np; ++p) {
            // R = W_p C_r Gamma_r A_r diag(z) A_t^H Gamma_t^H
            const cmat r = (ops.wcg[p] * ar) * z.asDiagonal() * atg_h;
            const cmat x = r * qs[p];
            const cvec d = meas.y[m].segment(meas.offset(q, p), nrf) - r * meas.beams.s[p];
            ne.G.noalias() += x.adjoint() * x;
            ne.h.noalias() += x.adjoint() * d;
        }
        return ne;
    };
    kernels::NormalEq ne = parallel ? kernels::reduce_parallel(chunks, dim, chunk)
                                    : kernels::reduce_serial(chunks, dim, chunk);
    if (lambda != 0) ne.G += penalty_gram(lay, lambda);

    CouplingUpdate out;
    const cvec u_conj = solve_hermitian_floor(ne.G, ne.h, out.flagged);
    out.u = CouplingParams::split(u_conj.conjugate(), lay);
    out.C = reconstruct_matrix(out.u, lay);
    return out;
}

}  // namespace wbcal
