#pragma once

#include "wbcal/model.hpp"

namespace wbcal {

struct GridSpec {
    int g_rx = 1, g_ry = 1;
    int g_tx = 1, g_ty = 1;
    int g_tau = 1;
    double tau_max = 0;

    int g_r() const { return g_rx * g_ry; }
    int g_t() const { return g_tx * g_ty; }
    long long columns() const { return static_cast<long long>(g_r()) * g_t() * g_tau; }

    // twice the antenna count per axis and twice the CP length in delay
    static GridSpec defaults(const ArrayPair& arrays, int n_cp, double tau_max);
};

struct Grids {
    rvec rx, ry, tx, ty, tau;
};

// uniform grid on [-1, 1), G points
rvec angle_grid(int G);
// uniform grid on [0, tau_max] with both ends
rvec delay_grid(int G, double tau_max);

Grids build_grids(const GridSpec& spec);

struct GridTriple {
    int g_r = 0, g_t = 0, g_tau = 0;
};

// Dictionary kept in factored form. Segment (q, p) of column (g_r, g_t, g_tau) is
//   B(q, g_tau) * T[q](p, g_t) * wcg_p * A[q].col(g_r)
// with T[q](p, g_t) = a_t(g_t)^H Gamma_t^H C_t^H F_p q_p.
struct Dictionary {
    GridSpec spec;
    Grids grids;
    int n_p = 0, n_rrf = 0;
    std::vector<int> carriers;
    std::vector<cmat> wcg;   // per pilot, N_rrf x N_r
    std::vector<cmat> A;     // per carrier, raw BS steering on the grid, N_r x G_r
    std::vector<cmat> T;     // per carrier, N_p x G_t
    cmat B;                  // Q x G_tau
    rmat norms;              // G_r x G_t, column norms (independent of the delay index)
    cmat explicit_matrix;    // optional materialization, rows x columns

    long long columns() const { return spec.columns(); }
    Eigen::Index rows() const { return static_cast<Eigen::Index>(carriers.size()) * n_p * n_rrf; }
    int col_index(const GridTriple& t) const { return (t.g_r * spec.g_t() + t.g_t) * spec.g_tau + t.g_tau; }
    GridTriple triple(long long col) const;
    cvec column(long long col) const;
    bool materialized() const { return explicit_matrix.size() > 0; }
};

struct DictionaryOptions {
    bool materialize = false;
    long long entry_budget = 16LL * 1024 * 1024;
    bool parallel = true;
};

Dictionary build_dictionary(const GridSpec& spec, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                            const MeasurementSet& meas, const Setup& setup, const DictionaryOptions& opt = {});

struct SupportEstimate {
    std::vector<GridTriple> atoms;
    std::vector<long long> columns;
    cvec gains;
    std::vector<double> residual_norms;  // after each accepted atom
    int dropped = 0;
};

SupportEstimate omp_solve(const cvec& y, const Dictionary& dict, int L_hat, bool parallel = true);

FrameEstimate support_to_frame(const SupportEstimate& s, const Dictionary& dict);

}  // namespace wbcal
