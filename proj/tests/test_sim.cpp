#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

using namespace wbcal;

TEST_CASE("NMSE examples")
{
    Rng rng(1);
    ChannelTensor h{tu::rand_cmat(rng, 4, 3), tu::rand_cmat(rng, 4, 3)};
    CHECK(sim::nmse_channel(h, h) == 0.0);
    const ChannelTensor zero{cmat::Zero(4, 3), cmat::Zero(4, 3)};
    CHECK(sim::nmse_channel(h, zero) == doctest::Approx(1.0));
    CHECK(sim::to_db(sim::nmse_channel(h, zero)) == doctest::Approx(0.0));
    ChannelTensor h2 = h;
    for (auto& m : h2) m *= 2.0;
    CHECK(sim::nmse_channel(h, h2) == doctest::Approx(1.0));
    CHECK_THROWS_AS(sim::nmse_channel(zero, h), InvalidArgument);
    CHECK_THROWS_AS(sim::nmse_channel(h, ChannelTensor{h[0]}), InvalidArgument);

    const cmat c = tu::rand_cmat(rng, 5, 5);
    CHECK(sim::nmse_coupling(c, c) == 0.0);
    CHECK(sim::nmse_coupling(c, cmat::Zero(5, 5)) == doctest::Approx(1.0));
    CHECK(sim::nmse_coupling(c, 2.0 * c) == doctest::Approx(1.0));
    CHECK(sim::to_db(0.0) == -300.0);
    CHECK(sim::to_db(0.01) == doctest::Approx(-20.0));
}

TEST_CASE("compression ratio")
{
    const sim::Ratio r = sim::compression_ratio_exact(2, 50, 32, 8);
    CHECK(r.num == 25);
    CHECK(r.den == 64);
    CHECK(std::round(r.value() * 1000) / 1000 == doctest::Approx(0.391));
    CHECK(sim::compression_ratio(2, 128, 32, 8) == 1.0);
    CHECK(sim::compression_ratio(2, 32, 32, 8) == 0.25);
    CHECK(sim::compression_ratio(2, 160, 32, 8) == 1.25);
    CHECK(sim::compression_ratio(sim::preset("paper-ula").sys, 50) == r.value());
}

TEST_CASE("presets and validation")
{
    for (const auto& n : sim::preset_names()) CHECK_NOTHROW(sim::preset(n).validate());
    CHECK_THROWS_AS(sim::preset("nope"), InvalidArgument);
    const sim::ScenarioConfig d = sim::preset("desk");
    CHECK(d.sys.nr_x == 16);
    CHECK(d.sys.nt_x == 4);
    CHECK(d.sys.K == 32);
    CHECK(d.sys.Q == 8);
    CHECK(d.sys.M == 3);
    CHECK(d.sys.L == 4);
    CHECK(d.algo.l_hat == 8);
    CHECK(d.algo.t_iter == 60);
    CHECK(d.n_pilots == std::vector<int>{24});
    CHECK(d.trials >= 50);
    CHECK(d.methods.size() == 6);
    const sim::ScenarioConfig u = sim::preset("paper-upa");
    CHECK(u.sys.nr_x * u.sys.nr_y == 32);
    CHECK(u.algo.t_iter == 1000);
    CHECK(sim::preset("paper-ula").algo.t_iter == 250);

    sim::ScenarioConfig e = d;
    e.methods.clear();
    CHECK_THROWS_AS(e.validate(), InvalidArgument);
    e = d;
    e.trials = 0;
    CHECK_THROWS_AS(e.validate(), InvalidArgument);
    e = d;
    e.sys.Q = 64;
    CHECK_THROWS_AS(e.validate(), InvalidArgument);
    e = d;
    e.approx_radii_bs = {0, 1};
    CHECK_THROWS_AS(e.validate(), InvalidArgument);
    CHECK_THROWS_AS(sim::run_experiment(e), InvalidArgument);
}

TEST_CASE("config text round trip and errors")
{
    const std::string text = R"(# comment
name = custom
nr_x = 6   # trailing comment
nt_x = 3
K = 16
Q = 4
snr_db = 0, 7.5, 15
n_pilots = 8, 12
methods = genie-ls, uncalibrated-omp
approx_radii_bs = 1, 0
grid = 12, 1, 6, 1, 8
phase_std_deg = 10
th1 = 1e-4
trials = 3
seed = 99
)";
    const sim::ScenarioConfig c = sim::parse_config(text, sim::preset("desk"));
    CHECK(c.name == "custom");
    CHECK(c.sys.nr_x == 6);
    CHECK(c.snr_db == std::vector<double>{0, 7.5, 15});
    CHECK(c.n_pilots == std::vector<int>{8, 12});
    CHECK(c.methods == std::vector<sim::Method>{sim::Method::GenieLS, sim::Method::UncalibratedOMP});
    CHECK(c.approx_radii_bs.q_x == 1);
    CHECK_FALSE(c.default_grid);
    CHECK(c.algo.grid.g_tau == 8);
    CHECK(c.sys.errors.phase_std == doctest::Approx(10 * kPi / 180));
    CHECK(c.algo.th1 == 1e-4);
    CHECK(c.seed == 99);

    const std::string formatted = sim::format_config(c);
    const sim::ScenarioConfig again = sim::parse_config(formatted, sim::ScenarioConfig{});
    CHECK(sim::format_config(again) == formatted);

    CHECK_THROWS_AS(sim::parse_config("bogus = 1\n", c), InvalidArgument);
    CHECK_THROWS_AS(sim::parse_config("K = twelve\n", c), InvalidArgument);
    CHECK_THROWS_AS(sim::parse_config("no equals sign\n", c), InvalidArgument);
    CHECK_THROWS_AS(sim::parse_config("methods = \n", c).validate(), InvalidArgument);
    CHECK_THROWS_AS(sim::parse_config("methods = magic\n", c), InvalidArgument);
    try {
        sim::parse_config("K = 4\n\nbogus = 1\n", c);
    } catch (const InvalidArgument& err) {
        CHECK(std::string(err.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("method names round trip")
{
    for (auto m : {sim::Method::GenieLS, sim::Method::PerfectCalibration, sim::Method::PropApprox,
                   sim::Method::PropSwitch, sim::Method::PropNoSwitch, sim::Method::UncalibratedOMP})
        CHECK(sim::parse_method(sim::method_name(m)) == m);
}

TEST_CASE("instances: per-trial streams and shared noise across SNR")
{
    const sim::ScenarioConfig cfg = sim::preset("desk");
    const sim::TrialInstance a = sim::make_instance(cfg, 24, 3);
    const sim::TrialInstance b = sim::make_instance(cfg, 24, 3);
    const sim::TrialInstance c = sim::make_instance(cfg, 24, 4);
    CHECK((a.bs.coupling - b.bs.coupling).norm() == 0.0);
    CHECK((a.bs.gamma - c.bs.gamma).norm() > 0.0);
    CHECK(static_cast<int>(a.channels.size()) == cfg.sys.M);

    const MeasurementSet m0 = sim::instance_measurements(a, 10, 1.0);
    const MeasurementSet m1 = sim::instance_measurements(a, 20, 1.0);
    const MeasurementSet clean = sim::instance_measurements(a, 400, 1.0);
    CHECK(m0.sigma2 == doctest::Approx(0.1));
    const cvec n0 = m0.y[0] - clean.y[0], n1 = m1.y[0] - clean.y[0];
    CHECK(tu::rel_err(n0, std::sqrt(10.0) * n1) < 1e-9);
}

TEST_CASE("method configs")
{
    const sim::ScenarioConfig cfg = sim::preset("desk");
    const Setup s = sim::make_setup(cfg.sys);
    const AlgoConfig ns = sim::method_config(cfg, sim::Method::PropNoSwitch, 20, s, false);
    CHECK_FALSE(ns.allow_offgrid);
    CHECK_FALSE(ns.use_approx);
    CHECK(sim::method_config(cfg, sim::Method::PropApprox, 20, s, false).use_approx);
    CHECK(sim::method_config(cfg, sim::Method::UncalibratedOMP, 20, s, false).t_iter == 0);
    CHECK_FALSE(sim::method_config(cfg, sim::Method::PerfectCalibration, 20, s, false).calibrate);
    const AlgoConfig a = sim::method_config(cfg, sim::Method::PropSwitch, 10, s, false);
    CHECK(a.lambda_r == doctest::Approx(10.0));
    CHECK(a.grid.g_rx == 32);
    CHECK(a.grid.g_tau == 16);
    CHECK(a.grid.tau_max == s.tau_max);
}

TEST_CASE("small experiment: determinism, CSV round trip, ordering of rows")
{
    sim::ScenarioConfig cfg = sim::preset("desk");
    cfg.trials = 2;
    cfg.snr_db = {10, 20};
    cfg.algo.t_iter = 3;
    cfg.sys.K = 16;
    cfg.sys.Q = 4;
    cfg.sys.nr_x = 8;
    cfg.n_pilots = {8};
    const auto rows = sim::run_experiment(cfg);
    REQUIRE(rows.size() == 2 * 2 * 6);
    CHECK(rows[0].snr_db == 10);
    CHECK(rows[0].trial == 0);
    CHECK(rows[6].trial == 1);
    CHECK(rows[12].snr_db == 20);
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.nmse_h_db));
        CHECK(r.seconds == 0.0);
    }
    const std::string csv = sim::format_csv(rows);
    CHECK(sim::format_csv(sim::run_experiment(cfg)) == csv);
    cfg.threads = 1;
    CHECK(sim::format_csv(sim::run_experiment(cfg)) == csv);
    const auto parsed = sim::parse_csv(csv);
    CHECK(sim::format_csv(parsed) == csv);
    CHECK_THROWS_AS(sim::parse_csv("bad header\n"), InvalidArgument);
    CHECK_THROWS_AS(sim::parse_csv(sim::csv_header() + "\n1,2\n"), InvalidArgument);

    // one trial runs serial at the outer level and parallel inside; same bytes as a two-trial run's first rows
    cfg.trials = 1;
    const auto one = sim::run_experiment(cfg);
    CHECK(sim::format_csv({one[0]}) == sim::format_csv({rows[0]}));

    const auto pts = sim::aggregate(rows);
    CHECK(pts.size() == 2 * 6);
    for (const auto& p : pts) CHECK(p.trials == 2);

    const auto dir = std::filesystem::temp_directory_path() / "wbcal_test_curves";
    std::filesystem::remove_all(dir);
    sim::write_curves(rows, cfg.sys, dir.string());
    for (const char* f : {"nmse_vs_snr.csv", "nmse_vs_pilots.csv", "coupling_vs_snr.csv"})
        CHECK(std::filesystem::exists(dir / f));
    std::ifstream in(dir / "nmse_vs_pilots.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("nu") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest carries the resolved configuration")
{
    const sim::ScenarioConfig cfg = sim::preset("desk");
    const auto j = nlohmann::json::parse(sim::manifest_json(cfg));
    CHECK(j.at("seed").get<std::uint64_t>() == cfg.seed);
    CHECK(j.at("config").at("K").get<std::string>() == "32");
    CHECK(j.at("csv_columns").size() == 9);
    CHECK_FALSE(j.at("git_describe").get<std::string>().empty());
}
