#include "wbcal/ongrid.hpp"

#include "wbcal/kernels.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/QR>
#include <limits>

namespace wbcal {

GridSpec GridSpec::defaults(const ArrayPair& arrays, int n_cp, double tau_max)
{
    GridSpec g;
    g.g_rx = 2 * arrays.bs.n_x;
    g.g_ry = arrays.bs.n_y > 1 ? 2 * arrays.bs.n_y : 1;
    g.g_tx = 2 * arrays.ue.n_x;
    g.g_ty = arrays.ue.n_y > 1 ? 2 * arrays.ue.n_y : 1;
    g.g_tau = 2 * n_cp;
    g.tau_max = tau_max;
    return g;
}

rvec angle_grid(int G)
{
    require(G >= 1, "angle_grid: G must be >= 1");
    rvec g(G);
    for (int i = 0; i < G; ++i) g[i] = -1.0 + 2.0 * i / G;
    return g;
}

rvec delay_grid(int G, double tau_max)
{
    require(G >= 1 && tau_max >= 0, "delay_grid: bad arguments");
    rvec g(G);
    if (G == 1) {
        g[0] = 0.0;
        return g;
    }
    for (int i = 0; i < G; ++i) g[i] = tau_max * i / (G - 1);
    return g;
}

Grids build_grids(const GridSpec& spec)
{
    return {angle_grid(spec.g_rx), angle_grid(spec.g_ry), angle_grid(spec.g_tx), angle_grid(spec.g_ty),
            delay_grid(spec.g_tau, spec.tau_max)};
}

GridTriple Dictionary::triple(long long col) const
{
    GridTriple t;
    t.g_tau = static_cast<int>(col % spec.g_tau);
    const long long rt = col / spec.g_tau;
    t.g_t = static_cast<int>(rt % spec.g_t());
    t.g_r = static_cast<int>(rt / spec.g_t());
    return t;
}

cvec Dictionary::column(long long col) const
{
    const GridTriple t = triple(col);
    cvec c(rows());
    for (size_t q = 0; q < carriers.size(); ++q) {
        const cd bq = B(q, t.g_tau);
        for (int p = 0; p < n_p; ++p) {
            const Eigen::Index off = (static_cast<Eigen::Index>(q) * n_p + p) * n_rrf;
            c.segment(off, n_rrf) = (bq * T[q](p, t.g_t)) * (wcg[p] * A[q].col(t.g_r));
        }
    }
    return c;
}

namespace {

void angle_pairs(const rvec& gx, const rvec& gy, rvec& vx, rvec& vy)
{
    const Eigen::Index n = gx.size() * gy.size();
    vx.resize(n);
    vy.resize(n);
    for (Eigen::Index j = 0; j < gy.size(); ++j)
        for (Eigen::Index i = 0; i < gx.size(); ++i) {
            vx[i + gx.size() * j] = gx[i];
            vy[i + gx.size() * j] = gy[j];
        }
}

}  // namespace

Dictionary build_dictionary(const GridSpec& spec, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                            const MeasurementSet& meas, const Setup& setup, const DictionaryOptions& opt)
{
    Dictionary d;
    d.spec = spec;
    d.grids = build_grids(spec);
    d.n_p = meas.schedule.n_p;
    d.n_rrf = meas.beams.n_rrf();
    d.carriers = meas.schedule.carriers;
    const ErrorOps ops = build_error_ops(bs, ue, meas.beams);
    d.wcg = ops.wcg;

    rvec rvx, rvy, tvx, tvy;
    angle_pairs(d.grids.rx, d.grids.ry, rvx, rvy);
    angle_pairs(d.grids.tx, d.grids.ty, tvx, tvy);
    cmat s_tilde(setup.arrays.ue.size(), d.n_p);
    for (int p = 0; p < d.n_p; ++p) s_tilde.col(p) = ops.s_tilde[p];

    const int Q = static_cast<int>(d.carriers.size());
    d.A.resize(Q);
    d.T.resize(Q);
    d.B.resize(Q, spec.g_tau);
    d.norms = rmat::Zero(spec.g_r(), spec.g_t());
    for (int q = 0; q < Q; ++q) {
        const int k = d.carriers[q];
        d.A[q] = steering_matrix(rvx, rvy, k, setup.arrays.bs, bs.spacing, setup.freq);
        const cmat at = steering_matrix(tvx, tvy, k, setup.arrays.ue, ue.spacing, setup.freq);
        d.T[q] = (at.adjoint() * s_tilde).transpose();
        d.B.row(q) = delay_response(d.grids.tau, k, setup.freq).transpose();
        const rmat t2 = d.T[q].cwiseAbs2();
        for (int p = 0; p < d.n_p; ++p) {
            const Eigen::RowVectorXd pr = (d.wcg[p] * d.A[q]).colwise().squaredNorm();
            d.norms += pr.transpose() * t2.row(p);
        }
    }
    d.norms = d.norms.cwiseSqrt();

    if (opt.materialize) {
        const long long entries = d.rows() * d.columns();
        if (entries <= opt.entry_budget)
            d.explicit_matrix = opt.parallel ? kernels::materialize_parallel(d) : kernels::materialize_serial(d);
        else
            spdlog::debug("dictionary has {} entries, above budget {}; using implicit columns", entries,
                          opt.entry_budget);
    }
    return d;
}

SupportEstimate omp_solve(const cvec& y, const Dictionary& dict, int L_hat, bool parallel)
{
    require(L_hat >= 1 && L_hat <= dict.columns(), "omp_solve: L_hat out of range");
    require(y.size() == dict.rows(), "omp_solve: observation length mismatch");
    SupportEstimate out;
    std::vector<char> blocked(static_cast<size_t>(dict.columns()), 0);
    cmat sub(y.size(), 0);
    cvec r = y;
    rvec score;
    cvec gains;

    while (static_cast<int>(out.columns.size()) < L_hat) {
        if (parallel)
            kernels::correlate_parallel(dict, r, score);
        else
            kernels::correlate_serial(dict, r, score);
        long long best = -1;
        double best_val = -1;
        for (long long c = 0; c < dict.columns(); ++c)
            if (!blocked[c] && score[c] > best_val) {
                best_val = score[c];
                best = c;
            }
        if (best < 0) break;
        blocked[best] = 1;

        cmat trial(y.size(), sub.cols() + 1);
        trial.leftCols(sub.cols()) = sub;
        trial.col(sub.cols()) = dict.materialized() ? cvec(dict.explicit_matrix.col(best)) : dict.column(best);
        Eigen::CompleteOrthogonalDecomposition<cmat> cod(trial);
        cod.setThreshold(1e-10);
        if (cod.rank() < trial.cols()) {
            ++out.dropped;
            spdlog::debug("omp: column {} makes the support rank deficient, skipped", best);
            continue;
        }
        sub = std::move(trial);
        gains = cod.solve(y);
        r = y - sub * gains;
        out.columns.push_back(best);
        out.atoms.push_back(dict.triple(best));
        out.residual_norms.push_back(r.norm());
    }
    out.gains = gains.size() == static_cast<Eigen::Index>(out.columns.size()) ? gains
                                                                               : cvec(cvec::Zero(out.columns.size()));
    return out;
}

FrameEstimate support_to_frame(const SupportEstimate& s, const Dictionary& dict)
{
    const int L = static_cast<int>(s.atoms.size());
    FrameEstimate f;
    f.vr_x.resize(L);
    f.vr_y.resize(L);
    f.vt_x.resize(L);
    f.vt_y.resize(L);
    f.tau.resize(L);
    f.alpha = s.gains;
    const int grx = dict.spec.g_rx, gtx = dict.spec.g_tx;
    for (int l = 0; l < L; ++l) {
        const GridTriple& t = s.atoms[l];
        f.vr_x[l] = dict.grids.rx[t.g_r % grx];
        f.vr_y[l] = dict.grids.ry[t.g_r / grx];
        f.vt_x[l] = dict.grids.tx[t.g_t % gtx];
        f.vt_y[l] = dict.grids.ty[t.g_t / gtx];
        f.tau[l] = dict.grids.tau[t.g_tau];
    }
    return f;
}

}  // namespace wbcal
