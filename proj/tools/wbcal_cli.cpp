// wbcal: run Monte Carlo experiments, check configs, aggregate result CSVs into curves.

#include "wbcal/kernels.hpp"
#include "wbcal/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace wbcal;

namespace {

struct Common {
    std::string preset = "desk";
    std::string config;
    long long seed = -1;
    int threads = -1;
};

sim::ScenarioConfig resolve(const Common& c)
{
    sim::ScenarioConfig cfg = sim::preset(c.preset);
    if (!c.config.empty()) cfg = sim::load_config(c.config, cfg);
    if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    // thread count: flag, then environment, then config file
    if (c.threads >= 0) {
        cfg.threads = c.threads;
    } else if (const char* env = std::getenv("WBCAL_THREADS"); env && *env) {
        try {
            cfg.threads = std::stoi(env);
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("WBCAL_THREADS is not an integer: ") + env);
        }
    }
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string read_text(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--preset", c.preset, "desk, paper-ula or paper-upa")
        ->check(CLI::IsMember(sim::preset_names()));
    app->add_option("--config", c.config, "key = value config file applied on top of the preset")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "master RNG seed")->check(CLI::NonNegativeNumber);
    app->add_option("--threads", c.threads, "worker threads (overrides WBCAL_THREADS)")
        ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wideband hybrid MIMO channel estimation with array calibration"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

    Common run_opts;
    std::string out_dir = "results";
    auto* run = app.add_subcommand("run", "run the Monte Carlo experiment and write results.csv + manifest.json");
    add_common(run, run_opts);
    run->add_option("--out", out_dir, "output directory");

    Common val_opts;
    auto* validate = app.add_subcommand("validate", "check a configuration and print it fully resolved");
    add_common(validate, val_opts);

    std::vector<std::string> inputs;
    std::string curves_out = "curves";
    Common curve_opts;
    auto* curves = app.add_subcommand("curves", "aggregate result CSVs into per-figure series");
    curves->add_option("inputs", inputs, "result directories or CSV files")->required();
    curves->add_option("--out", curves_out, "output directory");
    curves->add_option("--preset", curve_opts.preset, "array sizes used for the compression ratio")
        ->check(CLI::IsMember(sim::preset_names()));
    curves->add_option("--config", curve_opts.config, "config file with the array sizes")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*validate) {
            const sim::ScenarioConfig cfg = resolve(val_opts);
            std::cout << sim::format_config(cfg);
            std::cout << "# ok\n";
            return 0;
        }
        if (*run) {
            const sim::ScenarioConfig cfg = resolve(run_opts);
            fs::create_directories(out_dir);
            spdlog::info("{}: {} trials x {} SNRs x {} pilot counts x {} methods, {} threads", cfg.name, cfg.trials,
                         cfg.snr_db.size(), cfg.n_pilots.size(), cfg.methods.size(),
                         cfg.threads > 0 ? cfg.threads : max_threads());
            const auto t0 = std::chrono::steady_clock::now();
            const auto rows = sim::run_experiment(cfg);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_text(fs::path(out_dir) / "results.csv", sim::format_csv(rows));
            write_text(fs::path(out_dir) / "manifest.json", sim::manifest_json(cfg));
            spdlog::info("wrote {} rows to {} in {:.1f} s", rows.size(), out_dir, secs);
            for (const auto& p : sim::aggregate(rows))
                spdlog::info("  {:<20} snr {:>5} N_p {:>4}: NMSE(H) {:8.2f} dB  NMSE(C_r) {:8.2f} dB", p.method,
                             p.snr_db, p.n_pilots, sim::to_db(p.nmse_h), sim::to_db(p.nmse_cr));
            return 0;
        }
        if (*curves) {
            std::vector<sim::TrialResult> rows;
            std::string manifest_dir;
            for (const auto& in : inputs) {
                fs::path p(in);
                if (fs::is_directory(p)) {
                    if (manifest_dir.empty() && fs::exists(p / "manifest.json")) manifest_dir = p.string();
                    p /= "results.csv";
                }
                const auto part = sim::parse_csv(read_text(p));
                rows.insert(rows.end(), part.begin(), part.end());
            }
            sim::ScenarioConfig cfg = sim::preset(curve_opts.preset);
            if (!curve_opts.config.empty()) {
                cfg = sim::load_config(curve_opts.config, cfg);
            } else if (!manifest_dir.empty()) {
                // array sizes come from the first run's manifest
                const auto j = nlohmann::json::parse(read_text(fs::path(manifest_dir) / "manifest.json"));
                std::string text;
                for (const auto& [k, v] : j.at("config").items()) text += k + " = " + v.get<std::string>() + "\n";
                cfg = sim::parse_config(text, cfg);
            }
            sim::write_curves(rows, cfg.sys, curves_out);
            spdlog::info("aggregated {} rows into {}", rows.size(), curves_out);
            return 0;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
