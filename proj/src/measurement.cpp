#include "wbcal/measurement.hpp"

#include <Eigen/Eigenvalues>

namespace wbcal {

namespace {

cmat random_phase_matrix(Rng& rng, int rows, int cols, double scale)
{
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    cmat m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = std::polar(scale, ph(rng));
    return m;
}

}  // namespace

TrainingBeams design_training_beams(Rng& rng, const BeamConfig& cfg)
{
    require(cfg.n_r > 0 && cfg.n_t > 0 && cfg.n_rrf > 0 && cfg.n_trf > 0 && cfg.n_p > 0,
            "design_training_beams: counts must be positive");
    TrainingBeams b;
    const double amp = std::sqrt(cfg.p_s / 2.0);
    std::bernoulli_distribution coin(0.5);
    for (int p = 0; p < cfg.n_p; ++p) {
        b.F.push_back(random_phase_matrix(rng, cfg.n_t, cfg.n_trf, 1.0 / std::sqrt(double(cfg.n_t))));
        b.Wbar.push_back(random_phase_matrix(rng, cfg.n_rrf, cfg.n_r, 1.0 / std::sqrt(double(cfg.n_r))));
        cvec q(cfg.n_trf);
        for (int i = 0; i < cfg.n_trf; ++i) {
            const double re = coin(rng) ? amp : -amp;
            const double im = coin(rng) ? amp : -amp;
            q[i] = {re, im};
        }
        b.q.push_back(q);
    }
    return b;
}

cmat inverse_sqrt_psd(const cmat& c)
{
    Eigen::SelfAdjointEigenSolver<cmat> es(c);
    const rvec& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    if (!(top > 0) || ev.minCoeff() < 1e-12 * top)
        throw IllConditionedBeams("combiner Gram matrix is rank deficient");
    rvec inv = ev.cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

cmat WhitenedBeams::phi(int p) const
{
    const cmat& w = W[p];
    const cvec& sp = s[p];
    // (s^T kron W): block column j is s_j * W
    cmat out(w.rows(), w.cols() * sp.size());
    for (Eigen::Index j = 0; j < sp.size(); ++j) out.middleCols(j * w.cols(), w.cols()) = sp[j] * w;
    return out;
}

cmat WhitenedBeams::phi_stacked() const
{
    const int rows = n_rrf();
    cmat out(rows * n_p(), n_r() * n_t());
    for (int p = 0; p < n_p(); ++p) out.middleRows(p * rows, rows) = phi(p);
    return out;
}

WhitenedBeams whiten(const TrainingBeams& beams, double sigma)
{
    require(sigma > 0, "whiten: sigma must be positive");
    WhitenedBeams w;
    for (int p = 0; p < beams.n_p(); ++p) {
        const cmat& wb = beams.Wbar[p];
        const cmat cov = sigma * sigma * wb * wb.adjoint();
        const cmat d = sigma * inverse_sqrt_psd(cov);
        w.D.push_back(d);
        w.W.push_back(d * wb);
        w.s.push_back(beams.F[p] * beams.q[p]);
    }
    return w;
}

std::vector<int> allocate_pilot_subcarriers(int K, int Q)
{
    require(Q >= 1 && Q <= K, "allocate_pilot_subcarriers: need 1 <= Q <= K");
    if (Q == 1) return {(K + 1) / 2 - 1};
    std::vector<int> idx(Q);
    for (int i = 0; i < Q; ++i) idx[i] = static_cast<int>((static_cast<long long>(i) * K) / Q);
    return idx;
}

MeasurementSet simulate_measurements(const std::vector<ChannelTensor>& channels, const TrainingBeams& raw,
                                     const WhitenedBeams& beams, const PilotSchedule& schedule, double sigma2,
                                     Rng& rng)
{
    require(static_cast<int>(channels.size()) == schedule.frames, "simulate_measurements: frame count mismatch");
    require(raw.n_p() == schedule.n_p && beams.n_p() == schedule.n_p, "simulate_measurements: pilot count mismatch");
    MeasurementSet ms;
    ms.beams = beams;
    ms.schedule = schedule;
    ms.sigma2 = sigma2;
    const int nr = beams.n_r();
    for (int m = 0; m < schedule.frames; ++m) {
        cvec y(ms.frame_length());
        for (int q = 0; q < schedule.Q(); ++q) {
            const cmat& h = channels[m].at(schedule.carriers[q]);
            require(h.rows() == nr && h.cols() == beams.n_t(), "simulate_measurements: channel shape mismatch");
            for (int p = 0; p < schedule.n_p; ++p) {
                cvec n(nr);
                for (int i = 0; i < nr; ++i) n[i] = sigma2 > 0 ? complex_normal(rng, sigma2) : cd{};
                y.segment(ms.offset(q, p), beams.n_rrf()) =
                    beams.W[p] * (h * beams.s[p]) + beams.D[p] * (raw.Wbar[p] * n);
            }
        }
        ms.y.push_back(std::move(y));
    }
    return ms;
}

cvec vec(const cmat& m)
{
    return Eigen::Map<const cvec>(m.data(), m.size());
}

}  // namespace wbcal
