#pragma once

#include "wbcal/array_model.hpp"

#include <Eigen/SparseCore>

namespace wbcal {

struct CouplingRadii {
    int q_x = 0;
    int q_y = 0;
};

// Toeplitz parameter: coefficient c^d_delta shared by every entry whose block offset is d
// and in-block offset is delta
struct TpParam {
    int d;
    int delta;
};

// non-Toeplitz parameter: entry (i, i2) of block (j, j2), i <= i2, j <= j2, mirrored by symmetry
struct NtpParam {
    int j, j2;
    int i, i2;
};

// parameter ordering for one (geometry, radii) pair
struct CouplingLayout {
    int n_x = 1, n_y = 1;
    CouplingRadii radii;
    std::vector<TpParam> tp;
    std::vector<NtpParam> ntp;
    // first NTP index of each block, diagonal blocks first then off-diagonal pairs
    std::vector<std::pair<int, int>> ntp_blocks;
    std::vector<int> ntp_block_start;

    CouplingLayout(int nx, int ny, CouplingRadii r);
    CouplingLayout(const ArrayGeometry& g, CouplingRadii r) : CouplingLayout(g.n_x, g.n_y, r) {}

    int n() const { return n_x * n_y; }
    int q_tp() const { return static_cast<int>(tp.size()); }
    int q_ntp() const { return static_cast<int>(ntp.size()); }
    int q_total() const { return q_tp() + q_ntp(); }
    int q_x_count() const;  // Q^x = N_x + q_x(N_x-1) - q_x(q_x-1)/2

    // closed-form counts
    static int formula_tp(int nx, int ny, CouplingRadii r);
    static int formula_ntp(int nx, int ny, CouplingRadii r);

    // block index of the (j, j2) NTP block, -1 if none
    int block_index(int j, int j2) const;
};

struct CouplingParams {
    cvec u_tp;
    cvec u_ntp;

    cvec stacked() const;
    static CouplingParams split(const cvec& u, const CouplingLayout& lay);
};

cmat reconstruct_matrix(const CouplingParams& p, const CouplingLayout& lay);

// NTP entries read exactly; TP entries averaged over their constant-offset sets
CouplingParams params_from_matrix(const cmat& c, const CouplingLayout& lay);

cmat build_Q_TP(const cvec& b, const CouplingLayout& lay);
cmat build_Q_NTP(const cvec& b, const CouplingLayout& lay);
// [Q_TP(b), Q_NTP(b)]
cmat build_Q(const cvec& b, const CouplingLayout& lay);

// S with one +1/-1 pair per penalised coefficient difference, padded to Q x Q
Eigen::SparseMatrix<double> build_regularizer(const CouplingLayout& lay);

}  // namespace wbcal
