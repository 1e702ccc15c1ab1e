#pragma once

#include "wbcal/channel_model.hpp"

namespace wbcal {

struct BeamConfig {
    int n_r = 0;
    int n_t = 0;
    int n_rrf = 1;
    int n_trf = 1;
    int n_p = 1;
    double p_s = 1.0;
};

struct TrainingBeams {
    std::vector<cmat> F;     // N_t x N_trf
    std::vector<cmat> Wbar;  // N_rrf x N_r
    std::vector<cvec> q;     // N_trf

    int n_p() const { return static_cast<int>(F.size()); }
};

struct WhitenedBeams {
    std::vector<cmat> D;  // N_rrf x N_rrf
    std::vector<cmat> W;  // D_p * Wbar_p
    std::vector<cvec> s;  // F_p q_p, the transmitted vector

    int n_p() const { return static_cast<int>(W.size()); }
    int n_rrf() const { return W.empty() ? 0 : static_cast<int>(W[0].rows()); }
    int n_r() const { return W.empty() ? 0 : static_cast<int>(W[0].cols()); }
    int n_t() const { return s.empty() ? 0 : static_cast<int>(s[0].size()); }

    // Phi_p = (q^T F^T kron W_p)
    cmat phi(int p) const;
    // all pilots stacked
    cmat phi_stacked() const;
};

struct PilotSchedule {
    std::vector<int> carriers;  // 0-based, strictly increasing
    int n_p = 0;
    int frames = 1;

    int Q() const { return static_cast<int>(carriers.size()); }
};

// y[m] stacks (carrier q, pilot p, chain r) at ((q*N_p)+p)*N_rrf + r
struct MeasurementSet {
    std::vector<cvec> y;
    WhitenedBeams beams;
    PilotSchedule schedule;
    double sigma2 = 0;

    Eigen::Index offset(int q, int p) const
    {
        return (static_cast<Eigen::Index>(q) * schedule.n_p + p) * beams.n_rrf();
    }
    Eigen::Index frame_length() const
    {
        return static_cast<Eigen::Index>(schedule.Q()) * schedule.n_p * beams.n_rrf();
    }
};

TrainingBeams design_training_beams(Rng& rng, const BeamConfig& cfg);

// D_p = sigma * C_p^{-1/2} with C_p = sigma^2 Wbar Wbar^H
WhitenedBeams whiten(const TrainingBeams& beams, double sigma = 1.0);

// Hermitian inverse square root with eigenvalue floor 1e-12 * lambda_max
cmat inverse_sqrt_psd(const cmat& c);

std::vector<int> allocate_pilot_subcarriers(int K, int Q);

// noise enters at the antennas before the raw combiner and is whitened with D_p
MeasurementSet simulate_measurements(const std::vector<ChannelTensor>& channels, const TrainingBeams& raw,
                                     const WhitenedBeams& beams, const PilotSchedule& schedule, double sigma2,
                                     Rng& rng);

// column-major vec
cvec vec(const cmat& m);

}  // namespace wbcal
