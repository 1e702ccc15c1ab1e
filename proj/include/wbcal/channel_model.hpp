#pragma once

#include "wbcal/array_model.hpp"

namespace wbcal {

struct PathSet {
    cvec alpha;
    rvec tau;
    rvec vr_x, vr_y;
    rvec vt_x, vt_y;

    int size() const { return static_cast<int>(alpha.size()); }
};

// H_k for k = 0..K-1
using ChannelTensor = std::vector<cmat>;

struct ArrayPair {
    ArrayGeometry bs;
    ArrayGeometry ue;
};

// exp(-j 2 pi df_k tau_l)
cvec delay_response(const rvec& tau, int k, const FrequencyGrid& freq);

// z_k = diag(b_k(tau)) alpha
cvec equivalent_gain(const PathSet& paths, int k, const FrequencyGrid& freq);

// stacked effective steering vectors, one column per path
cmat effective_steering_matrix(const rvec& vx, const rvec& vy, int k, const ArrayErrorSet& err,
                               const ArrayGeometry& geom, const FrequencyGrid& freq);

cmat synthesize_subcarrier(const PathSet& paths, int k, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                           const ArrayPair& arrays, const FrequencyGrid& freq);

ChannelTensor synthesize_channel(const PathSet& paths, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                                 const ArrayPair& arrays, const FrequencyGrid& freq);

// max delay supported by the cyclic prefix, (N_cp - 1)/B
double max_delay(int n_cp, double bandwidth);

PathSet generate_pathset(Rng& rng, int L, const FrequencyGrid& freq, int n_cp);

}  // namespace wbcal
