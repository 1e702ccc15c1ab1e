#pragma once

#include "wbcal/model.hpp"

namespace wbcal {

struct LineSearchConfig {
    double step_angle = 1e-2;       // spatial-frequency units
    double step_delay = 1e-2;       // fraction of tau_max
    double step_spacing = 1e-2;     // fraction of lambda_c
    double beta = 0.5;
    int t_bct = 6;
    double growth_cap = 4.0;        // remembered step never exceeds growth_cap * initial
};

// T^z_{p,k} = W_p C_r Gamma_r A_r diag(t^z_{p,k}),  t^z_{p,k} = A_t^H Gamma_t^H C_t^H F_p q_p
struct TzBlock {
    int q = 0, p = 0;
    cmat Tz;
    cvec tz;
};
std::vector<TzBlock> assemble_T_z(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                                  const MeasurementSet& meas, const Setup& setup);

struct AlphaSolution {
    cvec alpha;
    bool flagged = false;  // rank deficient, singular values below the floor were dropped
};
AlphaSolution solve_alpha(const cvec& y, const cmat& T_alpha);

cvec gains_to_z(const cvec& alpha, const rvec& tau, int k, const FrequencyGrid& freq);

// ||y - T (T^+ y)||^2
double objective_frame(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                       const MeasurementSet& meas, int m, const Setup& setup);

// gradients of the fixed-gain residual ||y - T^z z||^2
struct FrameGradient {
    rvec vr_x, vr_y, vt_x, vt_y, tau;
};

// accumulated d/d(eps) of the same residual, summed over frames
struct SpacingGradient {
    rvec r_x, r_y, t_x, t_y;
    static SpacingGradient zeros(const ArrayPair& arrays);
};

FrameGradient frame_gradient(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                             const ErrorOps& ops, const MeasurementSet& meas, int m, const Setup& setup,
                             SpacingGradient* spacing = nullptr);

FrameGradient grad_angles_bs(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                             const MeasurementSet& meas, int m, const Setup& setup);
FrameGradient grad_angles_ue(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                             const MeasurementSet& meas, int m, const Setup& setup);
rvec grad_delay(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                const MeasurementSet& meas, int m, const Setup& setup);

struct RefineResult {
    FrameEstimate frame;
    double objective = 0;   // fixed-gain residual after the sweep
    bool flagged = false;
};

// one sweep: angles, then delays (both by backtracking), then closed-form gains
RefineResult refine_frame(const FrameEstimate& f, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                          const MeasurementSet& meas, int m, const Setup& setup, const LineSearchConfig& ls,
                          StepMemory& mem);

}  // namespace wbcal
