#include "wbcal/coupling.hpp"

namespace wbcal {

namespace {

// near-band (i, i2) pairs of one block row, i < i2 <= i + q_x
std::vector<std::pair<int, int>> band_pairs(int nx, int qx)
{
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i + 1 < nx; ++i)
        for (int i2 = i + 1; i2 <= std::min(i + qx, nx - 1); ++i2) out.emplace_back(i, i2);
    return out;
}

// [i, c] = a_{i+delta_c} + a_{i-delta_c}, a single term when delta_c = 0
cmat q_tilde_tp(const cvec& a, const std::vector<int>& deltas)
{
    const int nx = static_cast<int>(a.size());
    cmat q = cmat::Zero(nx, deltas.size());
    for (size_t c = 0; c < deltas.size(); ++c) {
        const int dl = deltas[c];
        for (int i = 0; i < nx; ++i) {
            if (i + dl < nx) q(i, c) += a[i + dl];
            if (dl > 0 && i - dl >= 0) q(i, c) += a[i - dl];
        }
    }
    return q;
}

// column (i, i2): a_{i2} at row i, a_i at row i2
cmat q_tilde_ntp(const cvec& a, const std::vector<std::pair<int, int>>& pairs)
{
    cmat q = cmat::Zero(a.size(), pairs.size());
    for (size_t c = 0; c < pairs.size(); ++c) {
        auto [i, i2] = pairs[c];
        q(i, c) = a[i2];
        q(i2, c) = a[i];
    }
    return q;
}

cmat q_check(const cvec& a, const std::vector<std::pair<int, int>>& pairs)
{
    cmat q(a.size(), a.size() + pairs.size());
    q.leftCols(a.size()) = a.asDiagonal();
    q.rightCols(pairs.size()) = q_tilde_ntp(a, pairs);
    return q;
}

}  // namespace

CouplingLayout::CouplingLayout(int nx, int ny, CouplingRadii r) : n_x(nx), n_y(ny), radii(r)
{
    require(nx >= 1 && ny >= 1, "CouplingLayout: bad geometry");
    require(r.q_x >= 0 && r.q_x <= nx - 1 && r.q_y >= 0 && r.q_y <= ny - 1, "CouplingLayout: radii out of range");

    for (int d = 0; d < ny; ++d) {
        const int first = d <= r.q_y ? r.q_x + 1 : 0;
        for (int dl = first; dl < nx; ++dl) tp.push_back({d, dl});
    }

    const auto pairs = band_pairs(nx, r.q_x);
    auto add_block = [&](int j, int j2) {
        ntp_blocks.emplace_back(j, j2);
        ntp_block_start.push_back(static_cast<int>(ntp.size()));
        if (j != j2)
            for (int i = 0; i < nx; ++i) ntp.push_back({j, j2, i, i});
        for (auto [i, i2] : pairs) ntp.push_back({j, j2, i, i2});
    };
    for (int j = 0; j < ny; ++j) add_block(j, j);
    for (int j = 0; j + 1 < ny; ++j)
        for (int j2 = j + 1; j2 <= std::min(j + r.q_y, ny - 1); ++j2) add_block(j, j2);
}

int CouplingLayout::q_x_count() const
{
    const int qx = radii.q_x;
    return n_x + qx * (n_x - 1) - qx * (qx - 1) / 2;
}

int CouplingLayout::formula_tp(int nx, int ny, CouplingRadii r)
{
    return nx * (ny - r.q_y - 1) + (r.q_y + 1) * (nx - r.q_x - 1);
}

int CouplingLayout::formula_ntp(int nx, int ny, CouplingRadii r)
{
    const int qxc = nx + r.q_x * (nx - 1) - r.q_x * (r.q_x - 1) / 2;
    return ny * (qxc - nx) + qxc * r.q_y * (ny - r.q_y) + qxc * r.q_y * (r.q_y - 1) / 2;
}

int CouplingLayout::block_index(int j, int j2) const
{
    for (size_t b = 0; b < ntp_blocks.size(); ++b)
        if (ntp_blocks[b] == std::make_pair(j, j2)) return static_cast<int>(b);
    return -1;
}

cvec CouplingParams::stacked() const
{
    cvec u(u_tp.size() + u_ntp.size());
    u << u_tp, u_ntp;
    return u;
}

CouplingParams CouplingParams::split(const cvec& u, const CouplingLayout& lay)
{
    require(u.size() == lay.q_total(), "CouplingParams::split: length mismatch");
    return {u.head(lay.q_tp()), u.tail(lay.q_ntp())};
}

cmat reconstruct_matrix(const CouplingParams& p, const CouplingLayout& lay)
{
    require(p.u_tp.size() == lay.q_tp() && p.u_ntp.size() == lay.q_ntp(), "reconstruct_matrix: length mismatch");
    const int nx = lay.n_x, ny = lay.n_y, n = lay.n();
    cmat c = cmat::Identity(n, n);

    // (d, delta) -> TP index
    std::vector<int> tp_idx(ny * nx, -1);
    for (int t = 0; t < lay.q_tp(); ++t) tp_idx[lay.tp[t].d * nx + lay.tp[t].delta] = t;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const int d = std::abs(a / nx - b / nx);
            const int dl = std::abs(a % nx - b % nx);
            const int t = tp_idx[d * nx + dl];
            if (t >= 0) c(a, b) = p.u_tp[t];
        }
    }
    for (int t = 0; t < lay.q_ntp(); ++t) {
        const auto& e = lay.ntp[t];
        const cd v = p.u_ntp[t];
        const int r0 = e.i + nx * e.j, r1 = e.i2 + nx * e.j;
        const int c0 = e.i + nx * e.j2, c1 = e.i2 + nx * e.j2;
        // block (j, j2) entries (i, i2), (i2, i) and the mirrored block (j2, j)
        c(r0, c1) = c(r1, c0) = c(c1, r0) = c(c0, r1) = v;
    }
    return c;
}

CouplingParams params_from_matrix(const cmat& c, const CouplingLayout& lay)
{
    const int nx = lay.n_x, ny = lay.n_y, n = lay.n();
    require(c.rows() == n && c.cols() == n, "params_from_matrix: size mismatch");
    CouplingParams p{cvec::Zero(lay.q_tp()), cvec::Zero(lay.q_ntp())};

    std::vector<int> tp_idx(ny * nx, -1);
    for (int t = 0; t < lay.q_tp(); ++t) tp_idx[lay.tp[t].d * nx + lay.tp[t].delta] = t;
    std::vector<int> hits(lay.q_tp(), 0);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const int t = tp_idx[std::abs(a / nx - b / nx) * nx + std::abs(a % nx - b % nx)];
            if (t < 0) continue;
            p.u_tp[t] += c(a, b);
            ++hits[t];
        }
    }
    for (int t = 0; t < lay.q_tp(); ++t) p.u_tp[t] /= double(hits[t]);

    for (int t = 0; t < lay.q_ntp(); ++t) {
        const auto& e = lay.ntp[t];
        const cd x = c(e.i + nx * e.j, e.i2 + nx * e.j2);
        const cd y = c(e.i2 + nx * e.j, e.i + nx * e.j2);
        p.u_ntp[t] = 0.5 * (x + y);
    }
    return p;
}

cmat build_Q_TP(const cvec& b, const CouplingLayout& lay)
{
    const int nx = lay.n_x, ny = lay.n_y;
    require(b.size() == lay.n(), "build_Q_TP: b length mismatch");
    cmat q = cmat::Zero(lay.n(), lay.q_tp());
    auto block = [&](int j) -> cvec { return b.segment(nx * j, nx); };

    int col = 0;
    for (int d = 0; d < ny; ++d) {
        std::vector<int> deltas;
        for (const auto& t : lay.tp)
            if (t.d == d) deltas.push_back(t.delta);
        if (deltas.empty()) continue;
        for (int j = 0; j < ny; ++j) {
            cvec a = cvec::Zero(nx);
            if (j + d < ny) a += block(j + d);
            if (d > 0 && j - d >= 0) a += block(j - d);
            q.block(nx * j, col, nx, deltas.size()) = q_tilde_tp(a, deltas);
        }
        col += static_cast<int>(deltas.size());
    }
    return q;
}

cmat build_Q_NTP(const cvec& b, const CouplingLayout& lay)
{
    const int nx = lay.n_x;
    require(b.size() == lay.n(), "build_Q_NTP: b length mismatch");
    cmat q = cmat::Zero(lay.n(), lay.q_ntp());
    const auto pairs = band_pairs(nx, lay.radii.q_x);
    auto block = [&](int j) -> cvec { return b.segment(nx * j, nx); };

    for (size_t k = 0; k < lay.ntp_blocks.size(); ++k) {
        auto [j, j2] = lay.ntp_blocks[k];
        const int start = lay.ntp_block_start[k];
        if (j == j2) {
            if (!pairs.empty()) q.block(nx * j, start, nx, pairs.size()) = q_tilde_ntp(block(j), pairs);
        } else {
            const int w = nx + static_cast<int>(pairs.size());
            q.block(nx * j, start, nx, w) = q_check(block(j2), pairs);
            q.block(nx * j2, start, nx, w) = q_check(block(j), pairs);
        }
    }
    return q;
}

cmat build_Q(const cvec& b, const CouplingLayout& lay)
{
    cmat q(lay.n(), lay.q_total());
    q.leftCols(lay.q_tp()) = build_Q_TP(b, lay);
    q.rightCols(lay.q_ntp()) = build_Q_NTP(b, lay);
    return q;
}

Eigen::SparseMatrix<double> build_regularizer(const CouplingLayout& lay)
{
    const int qn = lay.q_total();
    std::vector<Eigen::Triplet<double>> trip;
    int row = 0;
    auto diff_blocks = [&](int b0, int b1) {
        if (b0 < 0 || b1 < 0) return;
        const int len = (b0 + 1 < int(lay.ntp_block_start.size()) ? lay.ntp_block_start[b0 + 1] : lay.q_ntp())
                        - lay.ntp_block_start[b0];
        for (int t = 0; t < len; ++t) {
            trip.emplace_back(row, lay.q_tp() + lay.ntp_block_start[b0] + t, 1.0);
            trip.emplace_back(row, lay.q_tp() + lay.ntp_block_start[b1] + t, -1.0);
            ++row;
        }
    };
    // neighbouring diagonal blocks
    for (int j = 0; j + 1 < lay.n_y; ++j) diff_blocks(lay.block_index(j, j), lay.block_index(j + 1, j + 1));
    // neighbouring off-diagonal blocks at the same block offset
    for (int d = 1; d <= lay.radii.q_y; ++d)
        for (int j = 0; j + 1 + d < lay.n_y; ++j)
            diff_blocks(lay.block_index(j, j + d), lay.block_index(j + 1, j + 1 + d));

    Eigen::SparseMatrix<double> s(qn, qn);
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

}  // namespace wbcal
