#include "wbcal/sim.hpp"

#include "wbcal/kernels.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#ifndef WBCAL_GIT_DESCRIBE
#define WBCAL_GIT_DESCRIBE "unknown"
#endif

namespace wbcal::sim {

namespace {

const std::vector<std::pair<Method, std::string>> kMethodNames = {
    {Method::GenieLS, "genie-ls"},
    {Method::PerfectCalibration, "perfect-calibration"},
    {Method::PropApprox, "prop-approx"},
    {Method::PropSwitch, "prop-switch"},
    {Method::PropNoSwitch, "prop-noswitch"},
    {Method::UncalibratedOMP, "uncalibrated-omp"},
};

std::vector<Method> all_methods()
{
    std::vector<Method> out;
    for (const auto& [m, n] : kMethodNames) out.push_back(m);
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidArgument("config: " + key + " expects a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v)
{
    try {
        size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw InvalidArgument("config: " + key + " expects an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidArgument("config: " + key + " expects true/false, got '" + v + "'");
}

CouplingRadii to_radii(const std::string& key, const std::string& v)
{
    const auto parts = split_list(v);
    if (parts.size() != 2) throw InvalidArgument("config: " + key + " expects 'q_x, q_y'");
    return {static_cast<int>(to_int(key, parts[0])), static_cast<int>(to_int(key, parts[1]))};
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

using Setter = std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)>;

template <typename F>
Setter int_field(F f)
{
    return [f](ScenarioConfig& c, const std::string& k, const std::string& v) { f(c) = static_cast<int>(to_int(k, v)); };
}

template <typename F>
Setter real_field(F f)
{
    return [f](ScenarioConfig& c, const std::string& k, const std::string& v) { f(c) = to_double(k, v); };
}

template <typename F>
Setter bool_field(F f)
{
    return [f](ScenarioConfig& c, const std::string& k, const std::string& v) { f(c) = to_bool(k, v); };
}

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"name", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.name = v; }},
        {"scenario",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             if (v == "ula" || v == "ULA")
                 c.sys.scenario = ArrayScenario::ULA;
             else if (v == "upa" || v == "UPA")
                 c.sys.scenario = ArrayScenario::UPA;
             else
                 throw InvalidArgument("config: " + k + " must be ula or upa");
         }},
        {"nr_x", int_field([](ScenarioConfig& c) -> int& { return c.sys.nr_x; })},
        {"nr_y", int_field([](ScenarioConfig& c) -> int& { return c.sys.nr_y; })},
        {"nt_x", int_field([](ScenarioConfig& c) -> int& { return c.sys.nt_x; })},
        {"nt_y", int_field([](ScenarioConfig& c) -> int& { return c.sys.nt_y; })},
        {"f_c", real_field([](ScenarioConfig& c) -> double& { return c.sys.f_c; })},
        {"bandwidth", real_field([](ScenarioConfig& c) -> double& { return c.sys.bandwidth; })},
        {"K", int_field([](ScenarioConfig& c) -> int& { return c.sys.K; })},
        {"Q", int_field([](ScenarioConfig& c) -> int& { return c.sys.Q; })},
        {"M", int_field([](ScenarioConfig& c) -> int& { return c.sys.M; })},
        {"L", int_field([](ScenarioConfig& c) -> int& { return c.sys.L; })},
        {"n_cp", int_field([](ScenarioConfig& c) -> int& { return c.sys.n_cp; })},
        {"n_rrf", int_field([](ScenarioConfig& c) -> int& { return c.sys.n_rrf; })},
        {"n_trf", int_field([](ScenarioConfig& c) -> int& { return c.sys.n_trf; })},
        {"p_s", real_field([](ScenarioConfig& c) -> double& { return c.sys.p_s; })},
        {"gain_std", real_field([](ScenarioConfig& c) -> double& { return c.sys.errors.gain_std; })},
        {"phase_std_deg",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sys.errors.phase_std = to_double(k, v) * kPi / 180.0;
         }},
        {"eps_half_width", real_field([](ScenarioConfig& c) -> double& { return c.sys.errors.eps_half_width; })},
        {"eps_bound", real_field([](ScenarioConfig& c) -> double& { return c.sys.errors.eps_bound; })},
        {"c0_abs",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sys.errors.c0 = std::polar(to_double(k, v), std::arg(c.sys.errors.c0));
         }},
        {"c0_phase_deg",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sys.errors.c0 = std::polar(std::abs(c.sys.errors.c0), to_double(k, v) * kPi / 180.0);
         }},
        {"perturbed_distances", bool_field([](ScenarioConfig& c) -> bool& { return c.sys.errors.perturbed_distances; })},
        {"coupling_errors", bool_field([](ScenarioConfig& c) -> bool& { return c.sys.errors.coupling; })},
        {"t_iter", int_field([](ScenarioConfig& c) -> int& { return c.algo.t_iter; })},
        {"t_bct", int_field([](ScenarioConfig& c) -> int& { return c.algo.ls.t_bct; })},
        {"beta", real_field([](ScenarioConfig& c) -> double& { return c.algo.ls.beta; })},
        {"step_angle", real_field([](ScenarioConfig& c) -> double& { return c.algo.ls.step_angle; })},
        {"step_delay", real_field([](ScenarioConfig& c) -> double& { return c.algo.ls.step_delay; })},
        {"step_spacing", real_field([](ScenarioConfig& c) -> double& { return c.algo.ls.step_spacing; })},
        {"th1", real_field([](ScenarioConfig& c) -> double& { return c.algo.th1; })},
        {"th2", real_field([](ScenarioConfig& c) -> double& { return c.algo.th2; })},
        {"l_hat", int_field([](ScenarioConfig& c) -> int& { return c.algo.l_hat; })},
        {"early_exit", real_field([](ScenarioConfig& c) -> double& { return c.algo.early_exit; })},
        {"spacing_bound", real_field([](ScenarioConfig& c) -> double& { return c.algo.spacing_bound; })},
        {"materialize", bool_field([](ScenarioConfig& c) -> bool& { return c.algo.dict.materialize; })},
        {"approx_radii_bs",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.approx_radii_bs = to_radii(k, v); }},
        {"approx_radii_ue",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.approx_radii_ue = to_radii(k, v); }},
        {"lambda_scale", real_field([](ScenarioConfig& c) -> double& { return c.lambda_scale; })},
        {"grid",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             if (v == "auto") {
                 c.default_grid = true;
                 return;
             }
             const auto parts = split_list(v);
             if (parts.size() != 5) throw InvalidArgument("config: grid expects 'auto' or five counts");
             GridSpec& g = c.algo.grid;
             g.g_rx = static_cast<int>(to_int(k, parts[0]));
             g.g_ry = static_cast<int>(to_int(k, parts[1]));
             g.g_tx = static_cast<int>(to_int(k, parts[2]));
             g.g_ty = static_cast<int>(to_int(k, parts[3]));
             g.g_tau = static_cast<int>(to_int(k, parts[4]));
             c.default_grid = false;
         }},
        {"snr_db",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.snr_db.clear();
             for (const auto& s : split_list(v)) c.snr_db.push_back(to_double(k, s));
         }},
        {"n_pilots",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.n_pilots.clear();
             for (const auto& s : split_list(v)) c.n_pilots.push_back(static_cast<int>(to_int(k, s)));
         }},
        {"trials", int_field([](ScenarioConfig& c) -> int& { return c.trials; })},
        {"seed",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long s = to_int(k, v);
             if (s < 0) throw InvalidArgument("config: seed must be >= 0");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"methods",
         [](ScenarioConfig& c, const std::string&, const std::string& v) {
             c.methods.clear();
             if (v == "all") {
                 c.methods = all_methods();
                 return;
             }
             for (const auto& s : split_list(v)) c.methods.push_back(parse_method(s));
         }},
        {"threads", int_field([](ScenarioConfig& c) -> int& { return c.threads; })},
        {"record_seconds", bool_field([](ScenarioConfig& c) -> bool& { return c.record_seconds; })},
    };
    return table;
}

}  // namespace

std::string method_name(Method m)
{
    for (const auto& [id, n] : kMethodNames)
        if (id == m) return n;
    return "unknown";
}

Method parse_method(const std::string& s)
{
    for (const auto& [id, n] : kMethodNames)
        if (n == s) return id;
    throw InvalidArgument("unknown method '" + s + "'");
}

std::string scenario_name(ArrayScenario s) { return s == ArrayScenario::ULA ? "ula" : "upa"; }

void ScenarioConfig::validate() const
{
    const SystemConfig& s = sys;
    require(!methods.empty(), "config: method list is empty");
    require(!snr_db.empty(), "config: snr_db sweep is empty");
    require(!n_pilots.empty(), "config: n_pilots sweep is empty");
    require(trials >= 1, "config: trials must be >= 1");
    require(s.nr_x >= 1 && s.nr_y >= 1 && s.nt_x >= 1 && s.nt_y >= 1, "config: array sizes must be >= 1");
    if (s.scenario == ArrayScenario::ULA) require(s.nr_y == 1 && s.nt_y == 1, "config: ula scenario needs n_y = 1");
    require(s.f_c > 0 && s.bandwidth > 0, "config: f_c and bandwidth must be positive");
    require(s.bandwidth < 2 * s.f_c, "config: bandwidth must be below 2 f_c");
    require(s.K >= 1, "config: K must be >= 1");
    require(s.Q >= 1 && s.Q <= s.K, "config: need 1 <= Q <= K");
    require(s.M >= 1 && s.L >= 1 && s.n_cp >= 1, "config: M, L and n_cp must be >= 1");
    require(s.n_rrf >= 1 && s.n_rrf <= s.n_r(), "config: need 1 <= n_rrf <= N_r");
    require(s.n_trf >= 1 && s.n_trf <= s.n_t(), "config: need 1 <= n_trf <= N_t");
    require(s.p_s > 0, "config: p_s must be positive");
    require(s.errors.gain_std >= 0 && s.errors.phase_std >= 0 && s.errors.eps_half_width >= 0,
            "config: error spreads must be nonnegative");
    require(s.errors.eps_bound > 0, "config: eps_bound must be positive");
    for (double v : snr_db) require(std::isfinite(v), "config: snr values must be finite");
    for (int p : n_pilots) require(p >= 1, "config: pilot counts must be >= 1");
    auto check_radii = [](CouplingRadii r, int nx, int ny, const char* side) {
        require(r.q_x >= 0 && r.q_x <= nx - 1 && r.q_y >= 0 && r.q_y <= ny - 1,
                std::string("config: approx radii out of range on the ") + side + " side");
    };
    check_radii(approx_radii_bs, s.nr_x, s.nr_y, "bs");
    check_radii(approx_radii_ue, s.nt_x, s.nt_y, "ue");
    require(lambda_scale >= 0, "config: lambda_scale must be nonnegative");
    require(threads >= 0, "config: threads must be >= 0");
    AlgoConfig a = algo;
    if (default_grid) a.grid = GridSpec{1, 1, 1, 1, 1, 0};
    a.validate();
}

ScenarioConfig preset(const std::string& name)
{
    ScenarioConfig c;
    c.name = name;
    c.methods = all_methods();
    if (name == "desk") {
        // defaults in SystemConfig/ScenarioConfig are the desk-scale ULA
        c.algo.t_iter = 60;
        c.algo.l_hat = 8;
        return c;
    }
    // full-size settings of the reference evaluation
    SystemConfig& s = c.sys;
    s.f_c = 50e9;
    s.bandwidth = 2.5e9;
    s.K = 64;
    s.Q = 16;
    s.M = 5;
    s.L = 6;
    s.n_cp = 16;
    s.n_rrf = 2;
    s.n_trf = 2;
    c.algo.l_hat = 12;
    c.n_pilots = {50};
    c.snr_db = {-10, -5, 0, 5, 10, 15, 20};
    c.trials = 200;
    if (name == "paper-ula") {
        s.scenario = ArrayScenario::ULA;
        s.nr_x = 32;
        s.nr_y = 1;
        s.nt_x = 8;
        s.nt_y = 1;
        c.algo.t_iter = 250;
        c.approx_radii_bs = {2, 0};
        c.approx_radii_ue = {2, 0};
        return c;
    }
    if (name == "paper-upa") {
        s.scenario = ArrayScenario::UPA;
        s.nr_x = 8;
        s.nr_y = 4;
        s.nt_x = 8;
        s.nt_y = 1;
        c.algo.t_iter = 1000;
        c.approx_radii_bs = {1, 1};
        c.approx_radii_ue = {2, 0};
        return c;
    }
    throw InvalidArgument("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"desk", "paper-ula", "paper-upa"}; }

ScenarioConfig parse_config(const std::string& text, ScenarioConfig base)
{
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(fmt::format("config line {}: expected 'key = value'", lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw InvalidArgument(fmt::format("config line {}: unknown key '{}'", lineno, key));
        it->second(base, key, value);
    }
    return base;
}

ScenarioConfig load_config(const std::string& path, ScenarioConfig base)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string format_config(const ScenarioConfig& c)
{
    const SystemConfig& s = c.sys;
    auto join_d = [](const std::vector<double>& v) {
        std::vector<std::string> parts;
        for (double d : v) parts.push_back(fmt_num(d));
        return fmt::format("{}", fmt::join(parts, ", "));
    };
    std::vector<std::string> methods;
    for (Method m : c.methods) methods.push_back(method_name(m));
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    kv("name", c.name);
    kv("scenario", scenario_name(s.scenario));
    kv("nr_x", std::to_string(s.nr_x));
    kv("nr_y", std::to_string(s.nr_y));
    kv("nt_x", std::to_string(s.nt_x));
    kv("nt_y", std::to_string(s.nt_y));
    kv("f_c", fmt_num(s.f_c));
    kv("bandwidth", fmt_num(s.bandwidth));
    kv("K", std::to_string(s.K));
    kv("Q", std::to_string(s.Q));
    kv("M", std::to_string(s.M));
    kv("L", std::to_string(s.L));
    kv("n_cp", std::to_string(s.n_cp));
    kv("n_rrf", std::to_string(s.n_rrf));
    kv("n_trf", std::to_string(s.n_trf));
    kv("p_s", fmt_num(s.p_s));
    kv("gain_std", fmt_num(s.errors.gain_std));
    kv("phase_std_deg", fmt_num(s.errors.phase_std * 180.0 / kPi));
    kv("eps_half_width", fmt_num(s.errors.eps_half_width));
    kv("eps_bound", fmt_num(s.errors.eps_bound));
    kv("c0_abs", fmt_num(std::abs(s.errors.c0)));
    kv("c0_phase_deg", fmt_num(std::arg(s.errors.c0) * 180.0 / kPi));
    kv("perturbed_distances", s.errors.perturbed_distances ? "true" : "false");
    kv("coupling_errors", s.errors.coupling ? "true" : "false");
    kv("t_iter", std::to_string(c.algo.t_iter));
    kv("t_bct", std::to_string(c.algo.ls.t_bct));
    kv("beta", fmt_num(c.algo.ls.beta));
    kv("step_angle", fmt_num(c.algo.ls.step_angle));
    kv("step_delay", fmt_num(c.algo.ls.step_delay));
    kv("step_spacing", fmt_num(c.algo.ls.step_spacing));
    kv("th1", fmt_num(c.algo.th1));
    kv("th2", fmt_num(c.algo.th2));
    kv("l_hat", std::to_string(c.algo.l_hat));
    kv("early_exit", fmt_num(c.algo.early_exit));
    kv("spacing_bound", fmt_num(c.algo.spacing_bound));
    kv("materialize", c.algo.dict.materialize ? "true" : "false");
    kv("approx_radii_bs", fmt::format("{}, {}", c.approx_radii_bs.q_x, c.approx_radii_bs.q_y));
    kv("approx_radii_ue", fmt::format("{}, {}", c.approx_radii_ue.q_x, c.approx_radii_ue.q_y));
    kv("lambda_scale", fmt_num(c.lambda_scale));
    const GridSpec& g = c.algo.grid;
    kv("grid", c.default_grid ? "auto" : fmt::format("{}, {}, {}, {}, {}", g.g_rx, g.g_ry, g.g_tx, g.g_ty, g.g_tau));
    kv("snr_db", join_d(c.snr_db));
    kv("n_pilots", fmt::format("{}", fmt::join(c.n_pilots, ", ")));
    kv("trials", std::to_string(c.trials));
    kv("seed", std::to_string(c.seed));
    kv("methods", fmt::format("{}", fmt::join(methods, ", ")));
    kv("record_seconds", c.record_seconds ? "true" : "false");
    return out;
}

double nmse_channel(const ChannelTensor& truth, const ChannelTensor& estimate)
{
    require(truth.size() == estimate.size(), "nmse_channel: subcarrier count mismatch");
    double err = 0, ref = 0;
    for (size_t k = 0; k < truth.size(); ++k) {
        require(truth[k].rows() == estimate[k].rows() && truth[k].cols() == estimate[k].cols(),
                "nmse_channel: shape mismatch");
        err += (truth[k] - estimate[k]).squaredNorm();
        ref += truth[k].squaredNorm();
    }
    require(ref > 0, "nmse_channel: zero-energy truth");
    return err / ref;
}

double nmse_coupling(const cmat& truth, const cmat& estimate)
{
    require(truth.rows() == estimate.rows() && truth.cols() == estimate.cols(), "nmse_coupling: shape mismatch");
    const double ref = truth.squaredNorm();
    require(ref > 0, "nmse_coupling: zero-energy truth");
    return (truth - estimate).squaredNorm() / ref;
}

double to_db(double linear) { return linear > 1e-30 ? 10.0 * std::log10(linear) : -300.0; }

Ratio compression_ratio_exact(int n_rrf, int n_p, int n_r, int n_t)
{
    require(n_rrf >= 1 && n_p >= 1 && n_r >= 1 && n_t >= 1, "compression_ratio: sizes must be >= 1");
    const long long num = static_cast<long long>(n_rrf) * n_p;
    const long long den = static_cast<long long>(n_r) * n_t;
    const long long g = std::gcd(num, den);
    return {num / g, den / g};
}

double compression_ratio(int n_rrf, int n_p, int n_r, int n_t)
{
    return compression_ratio_exact(n_rrf, n_p, n_r, n_t).value();
}

double compression_ratio(const SystemConfig& sys, int n_p)
{
    return compression_ratio(sys.n_rrf, n_p, sys.n_r(), sys.n_t());
}

Setup make_setup(const SystemConfig& sys)
{
    Setup s;
    s.freq = FrequencyGrid(sys.f_c, sys.bandwidth, sys.K);
    const double lam = s.freq.lambda_c();
    s.arrays.bs = ArrayGeometry::half_wave(sys.nr_x, sys.nr_y, lam, Side::BS);
    s.arrays.ue = ArrayGeometry::half_wave(sys.nt_x, sys.nt_y, lam, Side::UE);
    s.tau_max = max_delay(sys.n_cp, sys.bandwidth);
    return s;
}

TrialInstance make_instance(const ScenarioConfig& cfg, int n_p, int trial)
{
    const SystemConfig& sys = cfg.sys;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(n_p)};
    Rng rng(seq);
    TrialInstance inst;
    inst.setup = make_setup(sys);
    const double lam = inst.setup.freq.lambda_c();
    inst.bs = generate_array_errors(rng, inst.setup.arrays.bs, sys.errors, lam);
    inst.ue = generate_array_errors(rng, inst.setup.arrays.ue, sys.errors, lam);
    for (int m = 0; m < sys.M; ++m) {
        inst.paths.push_back(generate_pathset(rng, sys.L, inst.setup.freq, sys.n_cp));
        inst.channels.push_back(
            synthesize_channel(inst.paths.back(), inst.bs, inst.ue, inst.setup.arrays, inst.setup.freq));
    }
    BeamConfig bc{sys.n_r(), sys.n_t(), sys.n_rrf, sys.n_trf, n_p, sys.p_s};
    inst.raw = design_training_beams(rng, bc);
    inst.beams = whiten(inst.raw, 1.0);
    inst.schedule = {allocate_pilot_subcarriers(sys.K, sys.Q), n_p, sys.M};
    inst.noise_rng = rng;
    return inst;
}

MeasurementSet instance_measurements(const TrialInstance& inst, double snr_db, double p_s)
{
    const double sigma2 = p_s / std::pow(10.0, snr_db / 10.0);
    Rng rng = inst.noise_rng;
    return simulate_measurements(inst.channels, inst.raw, inst.beams, inst.schedule, sigma2, rng);
}

AlgoConfig method_config(const ScenarioConfig& cfg, Method m, double snr_db, const Setup& setup, bool parallel)
{
    AlgoConfig a = cfg.algo;
    if (cfg.default_grid) a.grid = GridSpec::defaults(setup.arrays, cfg.sys.n_cp, setup.tau_max);
    a.grid.tau_max = setup.tau_max;
    a.parallel = parallel;
    a.dict.parallel = parallel;
    const double lam = cfg.lambda_scale / std::pow(10.0, snr_db / 10.0);
    a.lambda_r = lam;
    a.lambda_t = lam;
    a.radii_bs = cfg.approx_radii_bs;
    a.radii_ue = cfg.approx_radii_ue;
    switch (m) {
    case Method::PropApprox:
        a.use_approx = true;
        break;
    case Method::PropSwitch:
        a.use_approx = false;
        break;
    case Method::PropNoSwitch:
        a.use_approx = false;
        a.allow_offgrid = false;
        break;
    case Method::PerfectCalibration:
        a.calibrate = false;
        a.use_approx = false;
        break;
    case Method::UncalibratedOMP:
        a.t_iter = 0;
        a.use_approx = false;
        break;
    case Method::GenieLS:
        break;
    }
    return a;
}

TrialResult run_method(const ScenarioConfig& cfg, const TrialInstance& inst, const MeasurementSet& meas, Method m,
                       double snr_db, bool parallel)
{
    const auto t0 = std::chrono::steady_clock::now();
    TrialResult r;
    r.method = m;
    r.scenario = cfg.sys.scenario;
    r.snr_db = snr_db;
    r.n_pilots = inst.schedule.n_p;
    const ChannelTensor& truth = inst.channels.back();
    ChannelTensor est;
    cmat cr_hat;
    if (m == Method::GenieLS) {
        est = genie_ls_baseline(meas, inst.paths.back(), inst.bs, inst.ue, inst.setup);
        cr_hat = inst.bs.coupling;
    } else {
        const AlgoConfig a = method_config(cfg, m, snr_db, inst.setup, parallel);
        std::optional<EstimatorState> start;
        if (m == Method::PerfectCalibration) {
            EstimatorState st = initial_state(inst.setup, inst.schedule.frames);
            st.errors_bs = inst.bs;
            st.errors_ue = inst.ue;
            start = std::move(st);
        }
        EstimationResult res = run_estimation(meas, inst.setup, a, std::move(start));
        est = std::move(res.channel);
        cr_hat = res.state.errors_bs.coupling;
        r.iters = res.state.iterations;
    }
    r.nmse_h_db = to_db(nmse_channel(truth, est));
    r.nmse_cr_db = to_db(nmse_coupling(inst.bs.coupling, cr_hat));
    if (cfg.record_seconds)
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<TrialResult> run_experiment(const ScenarioConfig& cfg)
{
    cfg.validate();
    if (cfg.threads > 0) set_threads(cfg.threads);
    const int S = static_cast<int>(cfg.snr_db.size());
    const int T = cfg.trials;
    const int nm = static_cast<int>(cfg.methods.size());
    // one cell = (pilot count, trial); cells run in parallel, everything inside a cell is serial
    const int cells = static_cast<int>(cfg.n_pilots.size()) * T;
    const bool outer = cells > 1;
    std::vector<std::vector<TrialResult>> out(cells);
    std::vector<std::exception_ptr> errors(cells);
#pragma omp parallel for schedule(dynamic) if (outer)
    for (int c = 0; c < cells; ++c) {
        try {
            const int np = cfg.n_pilots[c / T];
            const int trial = c % T;
            const TrialInstance inst = make_instance(cfg, np, trial);
            for (int s = 0; s < S; ++s) {
                const MeasurementSet meas = instance_measurements(inst, cfg.snr_db[s], cfg.sys.p_s);
                for (int mi = 0; mi < nm; ++mi) {
                    TrialResult r = run_method(cfg, inst, meas, cfg.methods[mi], cfg.snr_db[s], !outer);
                    r.trial = trial;
                    out[c].push_back(r);
                }
            }
        } catch (...) {
            errors[c] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<TrialResult> rows;
    rows.reserve(static_cast<size_t>(cells) * S * nm);
    for (size_t pi = 0; pi < cfg.n_pilots.size(); ++pi)
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                const auto& cell = out[pi * T + t];
                for (int mi = 0; mi < nm; ++mi) rows.push_back(cell[s * nm + mi]);
            }
    return rows;
}

std::string csv_header() { return "method,scenario,snr_db,n_pilots,trial,nmse_h_db,nmse_cr_db,iters,seconds"; }

std::string format_csv(const std::vector<TrialResult>& rows)
{
    std::string out = csv_header() + "\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{:.6f},{:.6f},{},{:.6f}\n", method_name(r.method),
                           scenario_name(r.scenario), fmt_num(r.snr_db), r.n_pilots, r.trial, r.nmse_h_db,
                           r.nmse_cr_db, r.iters, r.seconds);
    return out;
}

std::vector<TrialResult> parse_csv(const std::string& text)
{
    std::stringstream in(text);
    std::string line;
    std::vector<TrialResult> rows;
    if (!std::getline(in, line) || trim(line) != csv_header()) throw InvalidArgument("csv: unexpected header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(trim(cell));
        if (f.size() != 9) throw InvalidArgument(fmt::format("csv line {}: expected 9 fields", lineno));
        TrialResult r;
        r.method = parse_method(f[0]);
        r.scenario = f[1] == "upa" ? ArrayScenario::UPA : ArrayScenario::ULA;
        r.snr_db = to_double("snr_db", f[2]);
        r.n_pilots = static_cast<int>(to_int("n_pilots", f[3]));
        r.trial = static_cast<int>(to_int("trial", f[4]));
        r.nmse_h_db = to_double("nmse_h_db", f[5]);
        r.nmse_cr_db = to_double("nmse_cr_db", f[6]);
        r.iters = static_cast<int>(to_int("iters", f[7]));
        r.seconds = to_double("seconds", f[8]);
        rows.push_back(r);
    }
    return rows;
}

std::string git_describe() { return WBCAL_GIT_DESCRIBE; }

std::string manifest_json(const ScenarioConfig& cfg)
{
    nlohmann::ordered_json j;
    j["tool"] = "wbcal";
    j["git_describe"] = git_describe();
    j["seed"] = cfg.seed;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    std::stringstream ss(format_config(cfg));
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        c[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    j["config"] = c;
    j["csv_columns"] = split_list(csv_header());
    return j.dump(2) + "\n";
}

std::vector<CurvePoint> aggregate(const std::vector<TrialResult>& rows)
{
    using Key = std::tuple<std::string, std::string, int, double>;
    std::map<Key, CurvePoint> cells;
    for (const auto& r : rows) {
        const Key k{method_name(r.method), scenario_name(r.scenario), r.n_pilots, r.snr_db};
        CurvePoint& p = cells[k];
        p.method = std::get<0>(k);
        p.scenario = std::get<1>(k);
        p.n_pilots = r.n_pilots;
        p.snr_db = r.snr_db;
        p.trials += 1;
        p.nmse_h += std::pow(10.0, r.nmse_h_db / 10.0);
        p.nmse_cr += std::pow(10.0, r.nmse_cr_db / 10.0);
    }
    std::vector<CurvePoint> out;
    for (auto& [k, p] : cells) {
        p.nmse_h /= p.trials;
        p.nmse_cr /= p.trials;
        out.push_back(p);
    }
    return out;
}

void write_curves(const std::vector<TrialResult>& rows, const SystemConfig& sys, const std::string& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const auto pts = aggregate(rows);
    auto open = [&](const std::string& name) {
        std::ofstream f(std::filesystem::path(out_dir) / name);
        if (!f) throw std::runtime_error("cannot write " + name);
        return f;
    };
    std::ofstream snr = open("nmse_vs_snr.csv");
    snr << "method,scenario,n_pilots,snr_db,trials,nmse_h_db\n";
    for (const auto& p : pts)
        snr << fmt::format("{},{},{},{},{},{:.6f}\n", p.method, p.scenario, p.n_pilots, fmt_num(p.snr_db), p.trials,
                           to_db(p.nmse_h));

    // pilot sweep grouped by SNR; map keeps the pilot counts ascending inside each group
    std::map<std::tuple<std::string, std::string, double, int>, const CurvePoint*> by_pilot;
    for (const auto& p : pts) by_pilot[{p.method, p.scenario, p.snr_db, p.n_pilots}] = &p;
    std::ofstream np = open("nmse_vs_pilots.csv");
    np << "method,scenario,snr_db,n_pilots,nu,trials,nmse_h_db\n";
    for (const auto& [k, p] : by_pilot)
        np << fmt::format("{},{},{},{},{:.3f},{},{:.6f}\n", p->method, p->scenario, fmt_num(p->snr_db), p->n_pilots,
                          compression_ratio(sys, p->n_pilots), p->trials, to_db(p->nmse_h));

    std::ofstream cr = open("coupling_vs_snr.csv");
    cr << "method,scenario,n_pilots,snr_db,trials,nmse_cr_db\n";
    for (const auto& p : pts)
        cr << fmt::format("{},{},{},{},{},{:.6f}\n", p.method, p.scenario, p.n_pilots, fmt_num(p.snr_db), p.trials,
                          to_db(p.nmse_cr));
}

}  // namespace wbcal::sim
