#include "wbcal/channel_model.hpp"

namespace wbcal {

cvec delay_response(const rvec& tau, int k, const FrequencyGrid& freq)
{
    require(k >= 0 && k < freq.K, "subcarrier index out of range");
    cvec b(tau.size());
    for (Eigen::Index l = 0; l < tau.size(); ++l) b[l] = std::polar(1.0, -2.0 * kPi * freq.delta_f[k] * tau[l]);
    return b;
}

cvec equivalent_gain(const PathSet& paths, int k, const FrequencyGrid& freq)
{
    return delay_response(paths.tau, k, freq).cwiseProduct(paths.alpha);
}

cmat effective_steering_matrix(const rvec& vx, const rvec& vy, int k, const ArrayErrorSet& err,
                               const ArrayGeometry& geom, const FrequencyGrid& freq)
{
    require(vx.size() == vy.size(), "angle vector length mismatch");
    cmat a(geom.size(), vx.size());
    for (Eigen::Index l = 0; l < vx.size(); ++l)
        a.col(l) = steering_upa(vx[l], vy[l], k, geom, err.spacing, freq);
    return err.coupling * err.gamma.asDiagonal() * a;
}

cmat synthesize_subcarrier(const PathSet& paths, int k, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                           const ArrayPair& arrays, const FrequencyGrid& freq)
{
    bs.validate(arrays.bs);
    ue.validate(arrays.ue);
    const cmat ar = effective_steering_matrix(paths.vr_x, paths.vr_y, k, bs, arrays.bs, freq);
    const cmat at = effective_steering_matrix(paths.vt_x, paths.vt_y, k, ue, arrays.ue, freq);
    return ar * equivalent_gain(paths, k, freq).asDiagonal() * at.adjoint();
}

ChannelTensor synthesize_channel(const PathSet& paths, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                                 const ArrayPair& arrays, const FrequencyGrid& freq)
{
    ChannelTensor h(freq.K);
    for (int k = 0; k < freq.K; ++k) h[k] = synthesize_subcarrier(paths, k, bs, ue, arrays, freq);
    return h;
}

double max_delay(int n_cp, double bandwidth)
{
    return (n_cp - 1) / bandwidth;
}

PathSet generate_pathset(Rng& rng, int L, const FrequencyGrid& freq, int n_cp)
{
    require(L >= 1, "generate_pathset: L must be >= 1");
    PathSet p;
    p.alpha.resize(L);
    p.tau.resize(L);
    p.vr_x.resize(L);
    p.vr_y.resize(L);
    p.vt_x.resize(L);
    p.vt_y.resize(L);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> del(0.0, max_delay(n_cp, freq.bandwidth));
    for (int l = 0; l < L; ++l) {
        p.alpha[l] = complex_normal(rng, 1.0 / L);
        const double az_r = ang(rng), ze_r = ang(rng), az_t = ang(rng), ze_t = ang(rng);
        auto [rx, ry] = angles_to_spatial(az_r, ze_r);
        auto [tx, ty] = angles_to_spatial(az_t, ze_t);
        // sin(.) can hit +1 exactly only on a measure-zero set; keep the half-open range
        p.vr_x[l] = wrap_unit(rx);
        p.vr_y[l] = wrap_unit(ry);
        p.vt_x[l] = wrap_unit(tx);
        p.vt_y[l] = wrap_unit(ty);
        p.tau[l] = del(rng);
    }
    return p;
}

}  // namespace wbcal
