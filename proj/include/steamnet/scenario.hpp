#pragma once

#include "steamnet/boiler.hpp"
#include "steamnet/ensemble.hpp"
#include "steamnet/hl_optimizer.hpp"
#include "steamnet/interval.hpp"
#include "steamnet/lowlevel.hpp"
#include "steamnet/mpc.hpp"
#include "steamnet/sysid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace steamnet {

struct DemandPoint {
    double t_s = 0.0;
    double value = 0.0; ///< ensemble steam demand [kg/s] from t_s on
};

struct IdentificationConfig {
    int levels = 12;             ///< distinct steam levels spanning [q_s_min, q_s_max]
    double hold_s = 600.0;       ///< time each level is held
    double validation_fraction = 0.2; ///< leading share of the record kept for validation
    int n_f = 3;
    int n_b = 2;
    int n_k = 1;
    double min_fit_percent = 95.0;
};

struct ScenarioConfig {
    int version = 1;
    std::vector<BoilerParams> boilers;
    Interval U_bar{0.089, 6.0};
    Interval Y_bar{0.1227, 4.220};
    double tau = 10.0;
    double T = 30.0;
    int hl_multiplier = 5;
    double dt_inner = 1.0;
    double duration_s = 3600.0;
    std::vector<DemandPoint> demand;
    LowLevelConfig low_level;
    double lambda_bar = 0.0;     ///< <= 0 selects 1e3 * max(lambda)
    double delta_u = 0.5;
    double trigger_threshold = 0.03;
    MpcConfig mpc;
    IdentificationConfig identification;
    std::uint64_t seed = 42;
    double V_w_fraction = 0.5;   ///< initial water volume as a share of V_T
    int template_boiler = 0;     ///< index of the generator whose dynamics anchor the ensemble
    double standby_margin = 1.02; ///< idle generators run at this multiple of their lowest admissible flow

    int nu() const;
    /// Throws ConfigError describing every problem found.
    void validate() const;
};

/// Five-generator installation with a stepped demand over one hour.
ScenarioConfig default_scenario();

/// Parses the versioned JSON configuration; absent fields take the default_scenario values.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ScenarioConfig& cfg);

/// Piecewise-constant demand at time t.
double demand_at(const std::vector<DemandPoint>& demand, double t);

struct IdentifiedBoiler {
    ArxModel arx;
    StateSpaceModel ss;
    double g = 0.0;
    double gamma = 0.0;
    double fit_percent = 0.0;
    double bias_bound = 0.0; ///< largest static-map error over the steam range
    std::vector<double> u;   ///< excitation record [kg/s]
    std::vector<double> y;   ///< gas response record [kg/s]
};

struct IdentificationResult {
    std::vector<IdentifiedBoiler> boilers;
    double tau = 10.0;
};

/// Multi-level excitation of every closed loop, ARX fit, validation and model checks.
/// Errors carry the generator number.
IdentificationResult run_identification(const ScenarioConfig& cfg);

/// Excitation sequence (one value per tau) used for identification.
std::vector<double> excitation_profile(const BoilerParams& b, const IdentificationConfig& ic, double tau,
                                       std::uint64_t seed);

struct StepRecord {
    double t_s = 0.0;
    double demand = 0.0;
    double r = 0.0;
    double r_hat = 0.0;
    double u_bar = 0.0;
    double y_bar = 0.0;
    double u_ss = 0.0;
    std::vector<double> alpha;
    std::vector<int> delta;
    std::vector<double> qs, qg, qf, p, Vw;
};

struct HlEvent {
    double t_s = 0.0;
    std::vector<int> delta;
    std::vector<double> alpha;
    double u_ss = 0.0;
    double demand = 0.0;
};

struct RunReport {
    int n_boilers = 0;
    std::vector<StepRecord> steps;
    int violations = 0;
    std::vector<std::string> violation_log;
    double max_w_inf = 0.0;     ///< largest observed slow-timescale ensemble mismatch
    double w_bound = 0.0;       ///< bound used to size the tube
    double total_gas_kg = 0.0;
    double total_steam_kg = 0.0;
    int hl_solve_count = 0;
    double wall_ms = 0.0;
    double max_rate = 0.0;      ///< largest |u_bar(k) - u_bar(k-1)|
    int mpc_solves = 0;
    int deferred_handoffs = 0;  ///< slow steps on which a new share pattern had to wait
    std::vector<HlEvent> hl_events; ///< share patterns as they were handed over
};

/// Runs the three-layer loop against the nonlinear plants. Identification is run
/// inline when @p ident is null. Any layer error aborts with the simulation time attached.
RunReport run_scenario(const ScenarioConfig& cfg, const IdentificationResult* ident = nullptr);

/// Writes timeseries.csv, summary.json and the three SVG charts. Throws IoError.
void emit_outputs(const RunReport& report, const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

/// Writes models.json and identification.csv. Throws IoError.
void emit_identification(const IdentificationResult& ident, const std::filesystem::path& out_dir);

std::string timeseries_csv(const RunReport& report);
std::string summary_json(const RunReport& report);

} // namespace steamnet
