#pragma once

// Monte Carlo driver: scenario config, baselines, metrics and result files.

#include "wbcal/estimator.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace wbcal::sim {

enum class ArrayScenario { ULA, UPA };

enum class Method { GenieLS, PerfectCalibration, PropApprox, PropSwitch, PropNoSwitch, UncalibratedOMP };

std::string method_name(Method m);
Method parse_method(const std::string& s);
std::string scenario_name(ArrayScenario s);

struct SystemConfig {
    ArrayScenario scenario = ArrayScenario::ULA;
    int nr_x = 16, nr_y = 1;
    int nt_x = 4, nt_y = 1;
    double f_c = 50e9;
    double bandwidth = 2.5e9;
    int K = 32;
    int Q = 8;
    int M = 3;
    int L = 4;
    int n_cp = 8;
    int n_rrf = 2;
    int n_trf = 2;
    double p_s = 1.0;
    ErrorConfig errors;

    int n_r() const { return nr_x * nr_y; }
    int n_t() const { return nt_x * nt_y; }
};

struct ScenarioConfig {
    std::string name = "desk";
    SystemConfig sys;
    AlgoConfig algo;
    CouplingRadii approx_radii_bs{2, 0};
    CouplingRadii approx_radii_ue{2, 0};
    double lambda_scale = 100.0;  // coupling penalty = lambda_scale / SNR (linear)
    bool default_grid = true;     // derive the OMP grid from the array sizes and N_cp
    std::vector<double> snr_db{20.0};
    std::vector<int> n_pilots{24};
    int trials = 50;
    std::uint64_t seed = 1;
    std::vector<Method> methods;
    int threads = 0;              // 0 keeps the OpenMP default
    bool record_seconds = false;  // wall time in the CSV breaks byte-identical reruns

    void validate() const;
};

ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// key = value lines, '#' comments, comma-separated lists; applied on top of `base`
ScenarioConfig parse_config(const std::string& text, ScenarioConfig base);
ScenarioConfig load_config(const std::string& path, ScenarioConfig base);
// inverse of parse_config for the resolved configuration
std::string format_config(const ScenarioConfig& cfg);

struct TrialResult {
    Method method;
    ArrayScenario scenario;
    double snr_db = 0;
    int n_pilots = 0;
    int trial = 0;
    double nmse_h_db = 0;
    double nmse_cr_db = 0;
    int iters = 0;
    double seconds = 0;
};

double nmse_channel(const ChannelTensor& truth, const ChannelTensor& estimate);
double nmse_coupling(const cmat& truth, const cmat& estimate);
// 10 log10 clamped at -300 dB so exact estimates stay finite
double to_db(double linear);

struct Ratio {
    long long num = 0;
    long long den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
Ratio compression_ratio_exact(int n_rrf, int n_p, int n_r, int n_t);
double compression_ratio(int n_rrf, int n_p, int n_r, int n_t);
double compression_ratio(const SystemConfig& sys, int n_p);

// everything a trial needs, shared by all methods and SNRs of that trial
struct TrialInstance {
    Setup setup;
    ArrayErrorSet bs, ue;
    std::vector<PathSet> paths;
    std::vector<ChannelTensor> channels;
    TrainingBeams raw;
    WhitenedBeams beams;
    PilotSchedule schedule;
    Rng noise_rng;  // copied per SNR so every SNR sees the same noise realisation, scaled
};

Setup make_setup(const SystemConfig& sys);
TrialInstance make_instance(const ScenarioConfig& cfg, int n_p, int trial);
MeasurementSet instance_measurements(const TrialInstance& inst, double snr_db, double p_s);

// estimator settings for one method at one SNR
AlgoConfig method_config(const ScenarioConfig& cfg, Method m, double snr_db, const Setup& setup, bool parallel);

TrialResult run_method(const ScenarioConfig& cfg, const TrialInstance& inst, const MeasurementSet& meas,
                       Method m, double snr_db, bool parallel);

// rows ordered by (n_p, snr, trial, method) whatever the thread count
std::vector<TrialResult> run_experiment(const ScenarioConfig& cfg);

std::string csv_header();
std::string format_csv(const std::vector<TrialResult>& rows);
std::vector<TrialResult> parse_csv(const std::string& text);
std::string manifest_json(const ScenarioConfig& cfg);
std::string git_describe();

// mean linear NMSE per (method, scenario, n_p, snr) cell
struct CurvePoint {
    std::string method, scenario;
    int n_pilots = 0;
    double snr_db = 0;
    int trials = 0;
    double nmse_h = 0;
    double nmse_cr = 0;
};
std::vector<CurvePoint> aggregate(const std::vector<TrialResult>& rows);

// writes nmse_vs_snr.csv, nmse_vs_pilots.csv and coupling_vs_snr.csv into out_dir
void write_curves(const std::vector<TrialResult>& rows, const SystemConfig& sys, const std::string& out_dir);

}  // namespace wbcal::sim
