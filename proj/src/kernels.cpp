#include "wbcal/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wbcal {

void set_threads(int n)
{
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace kernels {

namespace {

// Y_q = A_q^H [wcg_p^H r_qp]_p conj(T_q), G_r x G_t
cmat carrier_projection(const Dictionary& d, const cvec& r, int q)
{
    const Eigen::Index nr = d.A[q].rows();
    cmat v(nr, d.n_p);
    for (int p = 0; p < d.n_p; ++p) {
        const Eigen::Index off = (static_cast<Eigen::Index>(q) * d.n_p + p) * d.n_rrf;
        v.col(p).noalias() = d.wcg[p].adjoint() * r.segment(off, d.n_rrf);
    }
    const cmat x = d.A[q].adjoint() * v;
    return x * d.T[q].conjugate();
}

void score_row(const Dictionary& d, const std::vector<cmat>& y, int gr, rvec& score)
{
    const int gt_n = d.spec.g_t(), gtau_n = d.spec.g_tau;
    const int Q = static_cast<int>(y.size());
    for (int gt = 0; gt < gt_n; ++gt) {
        const double nrm = d.norms(gr, gt);
        const long long base = (static_cast<long long>(gr) * gt_n + gt) * gtau_n;
        for (int gtau = 0; gtau < gtau_n; ++gtau) {
            cd acc{};
            for (int q = 0; q < Q; ++q) acc += std::conj(d.B(q, gtau)) * y[q](gr, gt);
            score[base + gtau] = nrm > 0 ? std::abs(acc) / nrm : 0.0;
        }
    }
}

}  // namespace

void correlate_serial(const Dictionary& d, const cvec& r, rvec& score)
{
    const int Q = static_cast<int>(d.carriers.size());
    std::vector<cmat> y(Q);
    for (int q = 0; q < Q; ++q) y[q] = carrier_projection(d, r, q);
    score.resize(d.columns());
    for (int gr = 0; gr < d.spec.g_r(); ++gr) score_row(d, y, gr, score);
}

void correlate_parallel(const Dictionary& d, const cvec& r, rvec& score)
{
    const int Q = static_cast<int>(d.carriers.size());
    std::vector<cmat> y(Q);
#pragma omp parallel for schedule(static)
    for (int q = 0; q < Q; ++q) y[q] = carrier_projection(d, r, q);
    score.resize(d.columns());
    const int gr_n = d.spec.g_r();
#pragma omp parallel for schedule(static)
    for (int gr = 0; gr < gr_n; ++gr) score_row(d, y, gr, score);
}

cmat materialize_serial(const Dictionary& d)
{
    cmat m(d.rows(), d.columns());
    for (long long c = 0; c < d.columns(); ++c) m.col(c) = d.column(c);
    return m;
}

cmat materialize_parallel(const Dictionary& d)
{
    cmat m(d.rows(), d.columns());
    const long long n = d.columns();
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < n; ++c) m.col(c) = d.column(c);
    return m;
}

NormalEq reduce_serial(int chunks, int dim, const ChunkFn& fn)
{
    NormalEq out{cmat::Zero(dim, dim), cvec::Zero(dim)};
    for (int c = 0; c < chunks; ++c) {
        const NormalEq part = fn(c);
        out.G += part.G;
        out.h += part.h;
    }
    return out;
}

NormalEq reduce_parallel(int chunks, int dim, const ChunkFn& fn)
{
    std::vector<NormalEq> parts(chunks);
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < chunks; ++c) parts[c] = fn(c);
    NormalEq out{cmat::Zero(dim, dim), cvec::Zero(dim)};
    for (int c = 0; c < chunks; ++c) {
        out.G += parts[c].G;
        out.h += parts[c].h;
    }
    return out;
}

}  // namespace kernels
}  // namespace wbcal
