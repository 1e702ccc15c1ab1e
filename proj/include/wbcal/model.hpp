#pragma once

// Shared forward model: per-frame estimates, the estimator state and the ML objective.

#include "wbcal/coupling.hpp"
#include "wbcal/measurement.hpp"

namespace wbcal {

struct Setup {
    ArrayPair arrays;
    FrequencyGrid freq;
    double tau_max = 0;
};

struct FrameEstimate {
    rvec vr_x, vr_y;
    rvec vt_x, vt_y;
    rvec tau;
    cvec alpha;

    int size() const { return static_cast<int>(alpha.size()); }
    static FrameEstimate empty();
    // z_k = diag(b_k(tau)) alpha
    cvec z(int k, const FrequencyGrid& freq) const;
};

enum class Phase { OnGrid, OffGrid };
enum class CouplingMode { ToeplitzOnly, Approx };

// adaptive initial steps carried between line searches
struct StepMemory {
    double angle = 0;
    double delay = 0;
};

struct EstimatorState {
    ArrayErrorSet errors_bs;
    ArrayErrorSet errors_ue;
    std::vector<FrameEstimate> frames;
    std::vector<double> objective_history;
    Phase phase = Phase::OnGrid;
    CouplingMode coupling_mode = CouplingMode::ToeplitzOnly;
    std::vector<StepMemory> frame_steps;
    double spacing_step_bs = 0;
    double spacing_step_ue = 0;
    int iterations = 0;
    int flagged_solves = 0;
};

// W_p C_r Gamma_r and Gamma_t^H C_t^H F_p q_p for every pilot
struct ErrorOps {
    std::vector<cmat> wcg;
    std::vector<cvec> s_tilde;
};

ErrorOps build_error_ops(const ArrayErrorSet& bs, const ArrayErrorSet& ue, const WhitenedBeams& beams);

// A(v, eps) without coupling or gain errors, one column per path
cmat steering_matrix(const rvec& vx, const rvec& vy, int k, const ArrayGeometry& geom, const SpacingErrors& eps,
                     const FrequencyGrid& freq);

// per-carrier pieces of the model for one frame
struct CarrierTerms {
    int k = 0;
    cmat Ar, At;              // raw steering, N x L
    std::vector<cmat> E;      // W_p C_r Gamma_r A_r, N_rrf x L per pilot
    cmat G;                   // L x N_p, column p = At^H s_tilde_p
    cvec z;
};

CarrierTerms carrier_terms(const FrameEstimate& f, int k, const ErrorOps& ops, const ArrayErrorSet& bs,
                           const ArrayErrorSet& ue, const Setup& setup);

// T^alpha stacked like the measurements, N_rrf*N_p*Q x L
cmat assemble_T_alpha(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                      const MeasurementSet& meas, const Setup& setup);

// ||y^(m) - T^alpha alpha||^2 for the frame's current alpha
double frame_residual(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                      const ErrorOps& ops, const MeasurementSet& meas, int m, const Setup& setup);

// sum over frames, pilots and pilot carriers
double global_objective(const EstimatorState& st, const MeasurementSet& meas, const Setup& setup);
double global_objective(const ArrayErrorSet& bs, const ArrayErrorSet& ue, const std::vector<FrameEstimate>& frames,
                        const MeasurementSet& meas, const Setup& setup);

// H_k for every subcarrier from a frame estimate
ChannelTensor reconstruct_channel(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                                  const Setup& setup);

}  // namespace wbcal
