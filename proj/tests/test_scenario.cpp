#include "steamnet/errors.hpp"
#include "steamnet/scenario.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace steamnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("steamnet_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

// One generator held at a constant demand for twenty minutes.
ScenarioConfig single_boiler()
{
    ScenarioConfig cfg = default_scenario();
    cfg.boilers.resize(1);
    cfg.demand = {{0.0, 0.7}};
    cfg.duration_s = 1200.0;
    return cfg;
}

const IdentificationResult& single_identification()
{
    static const IdentificationResult id = run_identification(single_boiler());
    return id;
}

} // namespace

TEST_CASE("default configuration is valid and consistent with its JSON form")
{
    const ScenarioConfig cfg = default_scenario();
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.nu() == 3);
    CHECK(cfg.boilers.size() == 5);
    const ScenarioConfig back = parse_config(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(parse_config("{\"version\": 1}").boilers.size() == 5);
}

TEST_CASE("configuration errors are reported before any simulation")
{
    CHECK_THROWS_AS(parse_config("{\"version\": 1, \"demand\": []}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"version\": 2}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"version\": 1, \"bogus\": 3}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"version\": 1, \"T\": 25}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"version\": 1, \"boilers\": []}"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"version\": 1, \"demand\": [[600, 2.0], [0, 1.0]]}"), ConfigError);
    ScenarioConfig cfg = default_scenario();
    cfg.demand.clear();
    CHECK_THROWS_AS(run_scenario(cfg), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/steamnet.json"), IoError);
}

TEST_CASE("piecewise-constant demand lookup")
{
    const std::vector<DemandPoint> d{{0.0, 1.0}, {100.0, 2.0}, {200.0, 1.5}};
    CHECK(demand_at(d, 0.0) == 1.0);
    CHECK(demand_at(d, 99.9) == 1.0);
    CHECK(demand_at(d, 100.0) == 2.0);
    CHECK(demand_at(d, 1e6) == 1.5);
}

TEST_CASE("identical generators yield identical models")
{
    ScenarioConfig cfg = default_scenario();
    cfg.boilers = {cfg.boilers[0], cfg.boilers[0]};
    const IdentificationResult id = run_identification(cfg);
    REQUIRE(id.boilers.size() == 2);
    const auto& a = id.boilers[0].arx;
    const auto& b = id.boilers[1].arx;
    for (std::size_t k = 0; k < a.f.size(); ++k)
        CHECK(std::abs(a.f[k] - b.f[k]) <= 1e-3);
    for (std::size_t k = 0; k < a.b.size(); ++k)
        CHECK(std::abs(a.b[k] - b.b[k]) <= 1e-3);
    CHECK(std::abs(a.gamma - b.gamma) <= 1e-3);
}

TEST_CASE("empty excitation is not identifiable")
{
    ScenarioConfig cfg = single_boiler();
    cfg.identification.levels = 0;
    try {
        (void)run_identification(cfg);
        FAIL("expected IdentifiabilityError");
    } catch (const IdentifiabilityError& e) {
        CHECK(std::string(e.what()).find("boiler 1") != std::string::npos);
    }
}

TEST_CASE("identified model follows a closed-loop step of generator 1")
{
    const ScenarioConfig cfg = default_scenario();
    const BoilerParams& b = cfg.boilers[0];
    LowLevelConfig llc = cfg.low_level;
    llc.regulator.tau = llc.compensator.tau = cfg.tau;
    llc.dt_inner = cfg.dt_inner;
    const double u0 = 0.5 * (b.q_s_min + b.q_s_max);
    const double u1 = u0 + 0.2 * (b.q_s_max - b.q_s_min);
    auto cl = make_equilibrium(b, make_low_level_config(llc, b), u0, cfg.V_w_fraction * b.V_T);
    std::vector<double> u(3, u0), y;
    for (int k = 0; k < 3; ++k)
        y.push_back(closed_loop_step(cl, u0).q_g);
    for (int k = 0; k < 120; ++k) {
        u.push_back(u1);
        y.push_back(closed_loop_step(cl, u1).q_g);
    }
    const IdentificationResult id = run_identification(cfg);
    const auto y_hat = simulate(id.boilers[0].arx, u, std::span<const double>(y).first(3));
    const double amplitude = std::abs(y.back() - y.front());
    double worst = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        worst = std::max(worst, std::abs(y[k] - y_hat[k]));
    CHECK(worst <= 0.05 * amplitude);
}

TEST_CASE("single generator settles on the target without violations")
{
    const ScenarioConfig cfg = single_boiler();
    const RunReport rep = run_scenario(cfg, &single_identification());
    CHECK(rep.violations == 0);
    REQUIRE(!rep.steps.empty());
    const StepRecord& last = rep.steps.back();
    CHECK(last.r_hat == doctest::Approx(last.r).epsilon(1e-6));
    CHECK(std::abs(last.y_bar - last.r_hat) <= 1e-3);
    CHECK(last.alpha == std::vector<double>{1.0});
    // Commands add up to the ensemble input.
    for (const auto& s : rep.steps) {
        double sum = 0.0;
        for (std::size_t i = 0; i < s.alpha.size(); ++i)
            sum += s.alpha[i] * s.u_bar;
        CHECK(sum == doctest::Approx(s.u_bar).epsilon(1e-15));
    }
}

TEST_CASE("CSV round-trips the report at 17 significant digits")
{
    const RunReport rep = run_scenario(single_boiler(), &single_identification());
    const auto rows = parse_csv(timeseries_csv(rep));
    REQUIRE(rows.size() == rep.steps.size() + 1);
    CHECK(rows[0].size() == 7 + 7 * static_cast<std::size_t>(rep.n_boilers));
    CHECK(rows[0][0] == "t_s");
    CHECK(rows[0][7] == "alpha_1");
    CHECK(rows[0][13] == "Vw_1_m3");
    for (std::size_t k = 0; k < rep.steps.size(); ++k) {
        const auto& s = rep.steps[k];
        const auto& row = rows[k + 1];
        const double expected[] = {s.t_s, s.demand, s.r, s.r_hat, s.u_bar, s.y_bar, s.u_ss,
                                   s.alpha[0], static_cast<double>(s.delta[0]), s.qs[0], s.qg[0], s.qf[0], s.p[0], s.Vw[0]};
        REQUIRE(row.size() == 14);
        for (std::size_t c = 0; c < row.size(); ++c)
            CHECK(std::strtod(row[c].c_str(), nullptr) == expected[c]);
    }
}

TEST_CASE("runs are deterministic")
{
    const ScenarioConfig cfg = single_boiler();
    const std::string a = timeseries_csv(run_scenario(cfg, &single_identification()));
    const std::string b = timeseries_csv(run_scenario(cfg));
    CHECK(a == b);
}

TEST_CASE("empty report produces header-only outputs")
{
    RunReport rep;
    rep.n_boilers = 2;
    const fs::path dir = scratch_dir("empty");
    emit_outputs(rep, default_scenario(), dir);
    const auto rows = parse_csv(slurp(dir / "timeseries.csv"));
    CHECK(rows.size() == 1);
    CHECK(rows[0].size() == 21);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.size() == 6);
    for (const char* key : {"violations", "max_w_inf", "total_gas_kg", "total_steam_kg", "hl_solve_count", "wall_ms"})
        CHECK(summary.at(key).get<double>() == 0.0);
    for (const char* name : {"ensemble.svg", "shares.svg", "boilers.svg"}) {
        const std::string svg = slurp(dir / name);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("outputs and identification artifacts are written")
{
    const fs::path dir = scratch_dir("outputs");
    const RunReport rep = run_scenario(single_boiler(), &single_identification());
    emit_outputs(rep, single_boiler(), dir);
    emit_identification(single_identification(), dir);
    for (const char* name : {"timeseries.csv", "summary.json", "ensemble.svg", "shares.svg", "boilers.svg",
                             "models.json", "identification.csv"})
        CHECK(fs::file_size(dir / name) > 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("violations").get<int>() == 0);
    CHECK(summary.at("hl_solve_count").get<int>() == rep.hl_solve_count);
    fs::remove_all(dir);
}

TEST_CASE("unwritable output path raises an I/O error")
{
    const fs::path dir = scratch_dir("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    CHECK_THROWS_AS(emit_outputs(RunReport{}, default_scenario(), dir / "file" / "sub"), IoError);
    CHECK_THROWS_AS(emit_identification(IdentificationResult{}, dir / "file" / "sub"), IoError);
    fs::remove_all(dir);
}
