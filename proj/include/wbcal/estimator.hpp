#pragma once

#include "wbcal/coupling_update.hpp"
#include "wbcal/element_calib.hpp"
#include "wbcal/ongrid.hpp"

#include <functional>
#include <limits>
#include <optional>

namespace wbcal {

struct AlgoConfig {
    int t_iter = 60;
    LineSearchConfig ls;
    double th1 = 1e-3;
    double th2 = 1e-3;
    int l_hat = 8;
    CouplingRadii radii_bs;      // approximate-model radii, used once unlocked
    CouplingRadii radii_ue;
    bool use_approx = true;
    bool allow_offgrid = true;   // false keeps every iteration on the grid
    double lambda_r = 0;
    double lambda_t = 0;
    GridSpec grid;
    bool calibrate = true;       // false pins the array errors to their initial values
    double early_exit = 0;       // stop once off-grid and delta_F below this (0 disables)
    double spacing_bound = 0.25;
    bool parallel = true;
    DictionaryOptions dict;

    void validate() const;
};

// called after every stage with the global objective
using StageObserver = std::function<void(int iteration, const std::string& stage, const EstimatorState&, double F)>;

double delta_F(const std::vector<double>& history);

// LS gains for known paths and errors, single frame
FrameEstimate genie_frame(const PathSet& truth, const ArrayErrorSet& bs, const ArrayErrorSet& ue,
                          const MeasurementSet& meas, int m, const Setup& setup);

ChannelTensor genie_ls_baseline(const MeasurementSet& meas, const PathSet& truth_last_frame,
                                const ArrayErrorSet& bs, const ArrayErrorSet& ue, const Setup& setup);

struct EstimationResult {
    EstimatorState state;
    ChannelTensor channel;  // last frame, every subcarrier
};

// OMP estimate of every frame under the state's current errors
void ongrid_frames(EstimatorState& st, const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg);

// one calibration pass: coupling, gain/phase, spacing (both sides)
void calibration_pass(EstimatorState& st, const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg,
                      int iteration = 0, const StageObserver& observe = {});

EstimatorState initial_state(const Setup& setup, int frames);

EstimationResult run_estimation(const MeasurementSet& meas, const Setup& setup, const AlgoConfig& cfg,
                                std::optional<EstimatorState> start = std::nullopt,
                                const StageObserver& observe = {});

}  // namespace wbcal
