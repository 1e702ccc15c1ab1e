#pragma once

#include "wbcal/offgrid.hpp"

namespace wbcal {

struct GammaUpdate {
    cvec gamma;
    bool flagged = false;
};

// LS gain/phase on the BS side with T = W_p C_r diag(A_r diag(z) A_t^H Gamma_t^H C_t^H F_p q_p)
GammaUpdate solve_gamma_bs(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                           bool parallel = true);
// UE side; solved for conj(gamma_t) since the model carries Gamma_t^H
GammaUpdate solve_gamma_ue(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                           bool parallel = true);

// d/d(eps) of the fixed-gain global objective, summed over frames in frame order
SpacingGradient grad_spacing(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                             bool parallel = true);

struct SpacingStep {
    SpacingErrors spacing;
    double objective = 0;
    bool moved = false;
};

// backtracking step on one side's spacing errors; |eps| stays below bound * d
SpacingStep update_spacing(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup, Side side,
                           const SpacingGradient& grad, const LineSearchConfig& ls, double& step_memory,
                           double bound = 0.25, bool parallel = true);

// frames-parallel global objective with a fixed summation order
double global_objective_par(const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                            const std::vector<FrameEstimate>& frames, const MeasurementSet& meas,
                            const Setup& setup, bool parallel = true);

}  // namespace wbcal
