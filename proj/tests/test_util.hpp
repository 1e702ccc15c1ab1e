#pragma once

// Helpers shared by the unit tests and the acceptance binary. Oracles here are written
// from the model equations directly and avoid the library routine they are checking.

#include "wbcal/estimator.hpp"
#include "wbcal/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace tu {

using namespace wbcal;

inline cvec rand_cvec(Rng& rng, int n, double var = 1.0)
{
    cvec v(n);
    for (int i = 0; i < n; ++i) v[i] = complex_normal(rng, var);
    return v;
}

inline cmat rand_cmat(Rng& rng, int r, int c)
{
    cmat m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = complex_normal(rng);
    return m;
}

template <class A, class B>
double rel_err(const A& a, const B& b)
{
    const double d = std::max(b.norm(), 1e-300);
    return (a - b).norm() / d;
}

// one element of the steering vector straight from the phase formula
inline cd steer_entry(int i, int j, double vx, double vy, int k, const ArrayGeometry& g, const SpacingErrors& e,
                      const FrequencyGrid& f)
{
    const double scale = 2 * kPi / f.lambda_c() * (1.0 + f.delta_f[k] / f.f_c);
    const double ph = scale * (i * (g.d_x + e.eps_x[i]) * vx + j * (g.d_y + e.eps_y[j]) * vy);
    return {std::cos(ph), std::sin(ph)};
}

inline cvec steer_oracle(double vx, double vy, int k, const ArrayGeometry& g, const SpacingErrors& e,
                         const FrequencyGrid& f)
{
    cvec a(g.size());
    for (int j = 0; j < g.n_y; ++j)
        for (int i = 0; i < g.n_x; ++i) a[i + g.n_x * j] = steer_entry(i, j, vx, vy, k, g, e, f);
    return a;
}

// H_k summed path by path
inline cmat channel_oracle(const rvec& vrx, const rvec& vry, const rvec& vtx, const rvec& vty, const rvec& tau,
                           const cvec& alpha, int k, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                           const Setup& s)
{
    cmat h = cmat::Zero(s.arrays.bs.size(), s.arrays.ue.size());
    for (int l = 0; l < alpha.size(); ++l) {
        const cvec ar = bs.coupling * (bs.gamma.asDiagonal() * steer_oracle(vrx[l], vry[l], k, s.arrays.bs,
                                                                             bs.spacing, s.freq));
        const cvec at = ue.coupling * (ue.gamma.asDiagonal() * steer_oracle(vtx[l], vty[l], k, s.arrays.ue,
                                                                             ue.spacing, s.freq));
        const double ph = -2 * kPi * s.freq.delta_f[k] * tau[l];
        h += alpha[l] * cd(std::cos(ph), std::sin(ph)) * ar * at.adjoint();
    }
    return h;
}

// sum_{m,q,p} ||y - W_p H_k s_p||^2 with H_k from the oracle above
inline double objective_oracle(const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                               const std::vector<FrameEstimate>& frames, const MeasurementSet& ms, const Setup& s)
{
    double acc = 0;
    const int nrf = ms.beams.n_rrf();
    for (size_t m = 0; m < frames.size(); ++m) {
        const FrameEstimate& f = frames[m];
        for (int q = 0; q < ms.schedule.Q(); ++q) {
            const int k = ms.schedule.carriers[q];
            const cmat h = channel_oracle(f.vr_x, f.vr_y, f.vt_x, f.vt_y, f.tau, f.alpha, k, bs, ue, s);
            for (int p = 0; p < ms.schedule.n_p; ++p) {
                const cvec pred = ms.beams.W[p] * h * ms.beams.s[p];
                acc += (ms.y[m].segment(ms.offset(q, p), nrf) - pred).squaredNorm();
            }
        }
    }
    return acc;
}

struct InstanceSpec {
    int nr_x = 8, nr_y = 1, nt_x = 4, nt_y = 1;
    int K = 16, Q = 4, n_p = 8, M = 2, L = 2;
    int n_rrf = 2, n_trf = 2, n_cp = 8;
    double sigma2 = 0;
    bool errors = true;
    double f_c = 50e9, bandwidth = 2.5e9;
};

struct Instance {
    Setup setup;
    ArrayErrorSet bs, ue;
    std::vector<PathSet> paths;
    std::vector<ChannelTensor> channels;
    TrainingBeams raw;
    MeasurementSet meas;
};

inline Instance make_instance(Rng& rng, const InstanceSpec& sp, const std::vector<PathSet>* fixed_paths = nullptr)
{
    Instance in;
    sim::SystemConfig sys;
    sys.nr_x = sp.nr_x;
    sys.nr_y = sp.nr_y;
    sys.nt_x = sp.nt_x;
    sys.nt_y = sp.nt_y;
    sys.K = sp.K;
    sys.n_cp = sp.n_cp;
    sys.f_c = sp.f_c;
    sys.bandwidth = sp.bandwidth;
    in.setup = sim::make_setup(sys);
    const double lam = in.setup.freq.lambda_c();
    if (sp.errors) {
        ErrorConfig ec;
        in.bs = generate_array_errors(rng, in.setup.arrays.bs, ec, lam);
        in.ue = generate_array_errors(rng, in.setup.arrays.ue, ec, lam);
    } else {
        in.bs = ArrayErrorSet::ideal(in.setup.arrays.bs);
        in.ue = ArrayErrorSet::ideal(in.setup.arrays.ue);
    }
    for (int m = 0; m < sp.M; ++m) {
        in.paths.push_back(fixed_paths ? (*fixed_paths)[m] : generate_pathset(rng, sp.L, in.setup.freq, sp.n_cp));
        in.channels.push_back(synthesize_channel(in.paths.back(), in.bs, in.ue, in.setup.arrays, in.setup.freq));
    }
    in.raw = design_training_beams(rng, {in.setup.arrays.bs.size(), in.setup.arrays.ue.size(), sp.n_rrf, sp.n_trf,
                                         sp.n_p, 1.0});
    const WhitenedBeams wb = whiten(in.raw, 1.0);
    const PilotSchedule sched{allocate_pilot_subcarriers(sp.K, sp.Q), sp.n_p, sp.M};
    in.meas = simulate_measurements(in.channels, in.raw, wb, sched, sp.sigma2, rng);
    return in;
}

inline FrameEstimate frame_from_paths(const PathSet& p)
{
    return {p.vr_x, p.vr_y, p.vt_x, p.vt_y, p.tau, p.alpha};
}

inline double central_diff(const std::function<double(double)>& f, double h)
{
    return (f(h) - f(-h)) / (2 * h);
}

}  // namespace tu
