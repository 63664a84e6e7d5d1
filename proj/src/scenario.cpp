#include "steamnet/scenario.hpp"

#include "steamnet/errors.hpp"
#include "steamnet/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace steamnet {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

int ScenarioConfig::nu() const
{
    return static_cast<int>(std::lround(T / tau));
}

ScenarioConfig default_scenario()
{
    ScenarioConfig c;
    c.boilers = default_boilers();
    c.low_level = default_low_level_config();
    c.demand = {{0.0, 2.0}, {600.0, 2.1}, {1200.0, 2.2}, {1800.0, 2.9}, {2450.0, 3.9}, {3000.0, 3.0}};
    return c;
}

void ScenarioConfig::validate() const
{
    std::ostringstream msg;
    if (version != 1)
        msg << "unsupported schema version " << version << "; ";
    if (boilers.empty())
        msg << "at least one boiler is required; ";
    for (std::size_t i = 0; i < boilers.size(); ++i) {
        try {
            boilers[i].validate();
        } catch (const ContractError& e) {
            msg << "boiler " << i + 1 << ": " << e.what() << "; ";
        }
    }
    if (!(tau > 0.0) || !(T > 0.0) || !(dt_inner > 0.0))
        msg << "time steps must be positive; ";
    else {
        const double ratio = T / tau;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
            msg << "T must be an integer multiple of tau; ";
        const double inner = tau / dt_inner;
        if (std::abs(inner - std::round(inner)) > 1e-9)
            msg << "tau must be an integer multiple of the inner step; ";
    }
    if (hl_multiplier < 1)
        msg << "hl_multiplier must be at least 1; ";
    if (!(duration_s >= 0.0))
        msg << "duration must be non-negative; ";
    if (demand.empty())
        msg << "demand profile is empty; ";
    for (std::size_t i = 0; i < demand.size(); ++i) {
        if (!(demand[i].value >= 0.0) || !std::isfinite(demand[i].t_s))
            msg << "demand point " << i << " is invalid; ";
        if (i > 0 && !(demand[i].t_s > demand[i - 1].t_s))
            msg << "demand profile is not sorted by time; ";
    }
    if (U_bar.empty() || Y_bar.empty())
        msg << "global sets must be nonempty; ";
    if (!(delta_u > 0.0))
        msg << "delta_u must be positive; ";
    if (!(trigger_threshold > 0.0))
        msg << "trigger_threshold must be positive; ";
    if (!(std::abs(low_level.regulator.tau - tau) < 1e-12 && std::abs(low_level.compensator.tau - tau) < 1e-12))
        msg << "low-level sample time must equal tau; ";
    try {
        mpc.validate();
    } catch (const ContractError& e) {
        msg << e.what() << "; ";
    }
    const auto& id = identification;
    if (id.n_f < 1 || id.n_b < 1 || id.n_k < 1)
        msg << "identification orders must be positive; ";
    if (!(id.validation_fraction > 0.0 && id.validation_fraction < 1.0))
        msg << "validation_fraction must lie in (0, 1); ";
    if (id.levels < 0 || !(id.hold_s >= 0.0))
        msg << "identification excitation is invalid; ";
    if (!(V_w_fraction > 0.0 && V_w_fraction < 1.0))
        msg << "V_w_fraction must lie in (0, 1); ";
    if (template_boiler < 0 || template_boiler >= static_cast<int>(boilers.size()))
        msg << "template_boiler out of range; ";
    if (!(standby_margin >= 1.0))
        msg << "standby_margin must be at least 1; ";
    if (!msg.str().empty())
        throw ConfigError("invalid scenario configuration: " + problem_list(msg.str()));
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null())
        out = j.at(key).get<T>();
}

Interval read_interval(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(where + " must be a [min, max] pair");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json interval_json(const Interval& i)
{
    return json::array({i.lo, i.hi});
}

BoilerParams read_boiler(const json& j, const BoilerParams& base, const std::string& where)
{
    check_keys(j, {"V_T", "m_T", "c_p", "eta", "lambda_LHV", "h_f", "q_s", "q_g", "lambda", "p_sp"}, where);
    BoilerParams b = base;
    read(j, "V_T", b.V_T);
    read(j, "m_T", b.m_T);
    read(j, "c_p", b.c_p);
    read(j, "eta", b.eta);
    read(j, "lambda_LHV", b.lambda_LHV);
    read(j, "h_f", b.h_f);
    read(j, "lambda", b.lambda_cost);
    read(j, "p_sp", b.p_sp);
    if (j.contains("q_s")) {
        const Interval q = read_interval(j.at("q_s"), where + ".q_s");
        b.q_s_min = q.lo;
        b.q_s_max = q.hi;
    }
    if (j.contains("q_g")) {
        const Interval q = read_interval(j.at("q_g"), where + ".q_g");
        b.q_g_min = q.lo;
        b.q_g_max = q.hi;
    }
    return b;
}

void read_pi(const json& j, PIConfig& pi, const std::string& where)
{
    check_keys(j, {"K_P", "K_I", "anti_windup"}, where);
    read(j, "K_P", pi.K_P);
    read(j, "K_I", pi.K_I);
    read(j, "anti_windup", pi.anti_windup);
}

} // namespace

ScenarioConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    ScenarioConfig c = default_scenario();
    try {
        check_keys(j, {"version", "seed", "duration_s", "timing", "sets", "boilers", "demand", "low_level",
                       "high_level", "mpc", "identification", "initial", "template_boiler", "standby_margin"},
                   "configuration");
        if (!j.contains("version"))
            throw ConfigError("configuration lacks the 'version' field");
        read(j, "version", c.version);
        read(j, "seed", c.seed);
        read(j, "duration_s", c.duration_s);
        read(j, "standby_margin", c.standby_margin);
        if (j.contains("template_boiler"))
            c.template_boiler = j.at("template_boiler").get<int>() - 1;
        if (j.contains("timing")) {
            const auto& t = j.at("timing");
            check_keys(t, {"tau_s", "T_s", "hl_multiplier", "dt_inner_s"}, "timing");
            read(t, "tau_s", c.tau);
            read(t, "T_s", c.T);
            read(t, "hl_multiplier", c.hl_multiplier);
            read(t, "dt_inner_s", c.dt_inner);
        }
        if (j.contains("sets")) {
            const auto& s = j.at("sets");
            check_keys(s, {"U_bar", "Y_bar"}, "sets");
            if (s.contains("U_bar"))
                c.U_bar = read_interval(s.at("U_bar"), "sets.U_bar");
            if (s.contains("Y_bar"))
                c.Y_bar = read_interval(s.at("Y_bar"), "sets.Y_bar");
        }
        if (j.contains("boilers")) {
            const auto& arr = j.at("boilers");
            if (!arr.is_array())
                throw ConfigError("boilers must be an array");
            const auto defaults = default_boilers();
            c.boilers.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const BoilerParams& base = i < defaults.size() ? defaults[i] : defaults.front();
                c.boilers.push_back(read_boiler(arr.at(i), base, "boilers[" + std::to_string(i) + "]"));
            }
        }
        if (j.contains("demand")) {
            const auto& arr = j.at("demand");
            if (!arr.is_array())
                throw ConfigError("demand must be an array of [t_s, value] pairs");
            c.demand.clear();
            for (const auto& p : arr) {
                const Interval pair = read_interval(p, "demand entry");
                c.demand.push_back({pair.lo, pair.hi});
            }
        }
        if (j.contains("low_level")) {
            const auto& l = j.at("low_level");
            check_keys(l, {"R", "C"}, "low_level");
            if (l.contains("R"))
                read_pi(l.at("R"), c.low_level.regulator, "low_level.R");
            if (l.contains("C"))
                read_pi(l.at("C"), c.low_level.compensator, "low_level.C");
        }
        if (j.contains("high_level")) {
            const auto& h = j.at("high_level");
            check_keys(h, {"lambda_bar", "delta_u", "trigger_threshold"}, "high_level");
            read(h, "lambda_bar", c.lambda_bar);
            read(h, "delta_u", c.delta_u);
            read(h, "trigger_threshold", c.trigger_threshold);
        }
        if (j.contains("mpc")) {
            const auto& m = j.at("mpc");
            check_keys(m, {"N", "Q_y", "R", "rho", "tube_eps", "lqr_state_weight"}, "mpc");
            read(m, "N", c.mpc.N);
            read(m, "Q_y", c.mpc.Q_y);
            read(m, "R", c.mpc.R);
            read(m, "rho", c.mpc.rho);
            read(m, "tube_eps", c.mpc.tube_eps);
            read(m, "lqr_state_weight", c.mpc.lqr_state_weight);
        }
        if (j.contains("identification")) {
            const auto& m = j.at("identification");
            check_keys(m, {"levels", "hold_s", "validation_fraction", "n_f", "n_b", "n_k", "min_fit_percent"},
                       "identification");
            auto& id = c.identification;
            read(m, "levels", id.levels);
            read(m, "hold_s", id.hold_s);
            read(m, "validation_fraction", id.validation_fraction);
            read(m, "n_f", id.n_f);
            read(m, "n_b", id.n_b);
            read(m, "n_k", id.n_k);
            read(m, "min_fit_percent", id.min_fit_percent);
        }
        if (j.contains("initial")) {
            const auto& m = j.at("initial");
            check_keys(m, {"V_w_fraction"}, "initial");
            read(m, "V_w_fraction", c.V_w_fraction);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration has a field of the wrong type: ") + e.what());
    }
    c.low_level.regulator.tau = c.tau;
    c.low_level.compensator.tau = c.tau;
    c.low_level.dt_inner = c.dt_inner;
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read configuration file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ScenarioConfig& c)
{
    json j;
    j["version"] = c.version;
    j["seed"] = c.seed;
    j["duration_s"] = c.duration_s;
    j["template_boiler"] = c.template_boiler + 1;
    j["standby_margin"] = c.standby_margin;
    j["timing"] = {{"tau_s", c.tau}, {"T_s", c.T}, {"hl_multiplier", c.hl_multiplier}, {"dt_inner_s", c.dt_inner}};
    j["sets"] = {{"U_bar", interval_json(c.U_bar)}, {"Y_bar", interval_json(c.Y_bar)}};
    j["boilers"] = json::array();
    for (const auto& b : c.boilers)
        j["boilers"].push_back({{"V_T", b.V_T},
                                {"m_T", b.m_T},
                                {"c_p", b.c_p},
                                {"eta", b.eta},
                                {"lambda_LHV", b.lambda_LHV},
                                {"h_f", b.h_f},
                                {"q_s", json::array({b.q_s_min, b.q_s_max})},
                                {"q_g", json::array({b.q_g_min, b.q_g_max})},
                                {"lambda", b.lambda_cost},
                                {"p_sp", b.p_sp}});
    j["demand"] = json::array();
    for (const auto& d : c.demand)
        j["demand"].push_back(json::array({d.t_s, d.value}));
    const auto& R = c.low_level.regulator;
    const auto& C = c.low_level.compensator;
    j["low_level"] = {{"R", {{"K_P", R.K_P}, {"K_I", R.K_I}, {"anti_windup", R.anti_windup}}},
                      {"C", {{"K_P", C.K_P}, {"K_I", C.K_I}, {"anti_windup", C.anti_windup}}}};
    j["high_level"] = {{"lambda_bar", c.lambda_bar}, {"delta_u", c.delta_u}, {"trigger_threshold", c.trigger_threshold}};
    j["mpc"] = {{"N", c.mpc.N},
                {"Q_y", c.mpc.Q_y},
                {"R", c.mpc.R},
                {"rho", c.mpc.rho},
                {"tube_eps", c.mpc.tube_eps},
                {"lqr_state_weight", c.mpc.lqr_state_weight}};
    const auto& id = c.identification;
    j["identification"] = {{"levels", id.levels},       {"hold_s", id.hold_s}, {"validation_fraction", id.validation_fraction},
                           {"n_f", id.n_f},             {"n_b", id.n_b},       {"n_k", id.n_k},
                           {"min_fit_percent", id.min_fit_percent}};
    j["initial"] = {{"V_w_fraction", c.V_w_fraction}};
    return j.dump(2);
}

double demand_at(const std::vector<DemandPoint>& demand, double t)
{
    if (demand.empty())
        throw ConfigError("demand profile is empty");
    double v = demand.front().value;
    for (const auto& d : demand)
        if (d.t_s <= t + 1e-9)
            v = d.value;
    return v;
}

// ---------------------------------------------------------------------------
// Identification

namespace {

template <class E>
[[noreturn]] void rethrow_as(const E& e, const std::string& prefix)
{
    throw E(prefix + e.what());
}

// Re-raises a library error with context, keeping its type.
template <class F>
auto with_context(const std::string& prefix, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const IdentifiabilityError& e) {
        rethrow_as(e, prefix);
    } catch (const StabilityError& e) {
        rethrow_as(e, prefix);
    } catch (const AssumptionError& e) {
        rethrow_as(e, prefix);
    } catch (const ModelQualityError& e) {
        rethrow_as(e, prefix);
    } catch (const InfeasibleError& e) {
        rethrow_as(e, prefix);
    } catch (const GainDesignError& e) {
        rethrow_as(e, prefix);
    } catch (const ContractError& e) {
        rethrow_as(e, prefix);
    } catch (const NumericalError& e) {
        rethrow_as(e, prefix);
    } catch (const IntegrationError& e) {
        rethrow_as(e, prefix);
    } catch (const ModelValidityError& e) {
        rethrow_as(e, prefix);
    } catch (const RangeError& e) {
        rethrow_as(e, prefix);
    } catch (const DegenerateTemplateError& e) {
        rethrow_as(e, prefix);
    }
}

LowLevelConfig loop_config(const ScenarioConfig& cfg, const BoilerParams& b)
{
    LowLevelConfig base = cfg.low_level;
    base.regulator.tau = cfg.tau;
    base.compensator.tau = cfg.tau;
    base.dt_inner = cfg.dt_inner;
    return make_low_level_config(base, b);
}

} // namespace

std::vector<double> excitation_profile(const BoilerParams& b, const IdentificationConfig& ic, double tau,
                                       std::uint64_t seed)
{
    std::vector<double> levels;
    for (int l = 0; l < ic.levels; ++l)
        levels.push_back(ic.levels == 1 ? b.q_s_min
                                        : b.q_s_min + (b.q_s_max - b.q_s_min) * l / (ic.levels - 1.0));
    std::mt19937_64 rng(seed);
    std::shuffle(levels.begin(), levels.end(), rng);
    const int hold = static_cast<int>(std::lround(ic.hold_s / tau));
    std::vector<double> u;
    for (double v : levels)
        for (int k = 0; k < hold; ++k)
            u.push_back(v);
    return u;
}

IdentificationResult run_identification(const ScenarioConfig& cfg)
{
    cfg.validate();
    IdentificationResult out;
    out.tau = cfg.tau;
    const auto& ic = cfg.identification;
    for (std::size_t i = 0; i < cfg.boilers.size(); ++i) {
        const BoilerParams& b = cfg.boilers[i];
        const std::string prefix = "boiler " + std::to_string(i + 1) + ": ";
        IdentifiedBoiler ib;
        ib.u = excitation_profile(b, ic, cfg.tau, cfg.seed);
        with_context(prefix, [&] {
            if (ib.u.empty())
                throw IdentifiabilityError("excitation profile is empty");
            auto cl = make_equilibrium(b, loop_config(cfg, b), ib.u.front(), cfg.V_w_fraction * b.V_T);
            ib.y.reserve(ib.u.size());
            for (double u : ib.u)
                ib.y.push_back(closed_loop_step(cl, u).q_g);

            const std::size_t n = ib.u.size();
            const auto n_val = static_cast<std::size_t>(std::lround(ic.validation_fraction * static_cast<double>(n)));
            const std::span<const double> u_all(ib.u), y_all(ib.y);
            ib.arx = fit(u_all.subspan(n_val), y_all.subspan(n_val), ic.n_f, ic.n_b, ic.n_k, cfg.tau);
            ib.ss = realize(ib.arx);
            check_model_assumptions(ib.ss);
            ib.g = static_gain(ib.ss);
            ib.gamma = ib.arx.gamma;

            const auto u_val = u_all.first(n_val);
            const auto y_val = y_all.first(n_val);
            const std::size_t lag = static_cast<std::size_t>(std::max(ic.n_f, ic.n_k + ic.n_b - 1));
            const auto y_hat = simulate(ib.arx, u_val, y_val.first(std::min(lag, y_val.size())));
            ib.fit_percent = fit_percent(y_val, y_hat);
            if (!(ib.fit_percent >= ic.min_fit_percent)) {
                std::ostringstream msg;
                msg << "validation fit " << ib.fit_percent << "% is below " << ic.min_fit_percent << "%";
                throw ModelQualityError(msg.str());
            }

            for (int k = 0; k < 15; ++k) {
                const double q = b.q_s_min + (b.q_s_max - b.q_s_min) * k / 14.0;
                const double q_g = steady_gas_flow(b, q, cfg.V_w_fraction * b.V_T);
                ib.bias_bound = std::max(ib.bias_bound, std::abs(q_g - (ib.g * q + ib.gamma)));
            }
        });
        out.boilers.push_back(std::move(ib));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-loop scenario

namespace {

struct Plant {
    ClosedLoopBoiler loop;
    std::vector<double> y_hist; // y(k) per tau, oldest first
    std::vector<double> u_hist; // u(k) per tau
};

double standby_flow(const BoilerParams& b, const BoilerStatic& m, double margin)
{
    const double from_gas = (b.q_g_min - m.gamma) / m.g;
    return std::min(b.q_s_max, std::max(b.q_s_min, from_gas) * margin);
}

struct Stack {
    EnsembleModel ens;
    VelocityModel vm;
    TightenedSets sets;
    double r = 0.0;
};

Stack build_stack(const std::vector<ReferenceModel>& refs, const ShareSolution& s, int nu, const Eigen::VectorXd& w_box,
                  const MpcConstraints& cons, const std::vector<BoilerStatic>& models, const MpcConfig& mcfg)
{
    Stack st;
    st.ens = resample(aggregate(refs, s.alpha, s.delta), nu);
    st.vm = build_velocity_form(st.ens);
    st.sets = tighten(st.vm, st.ens, w_box, cons, s, models, mcfg);
    st.r = st.ens.g * s.u_ss + st.ens.gamma;
    return st;
}

// The medium level tightens generator i's sets by alpha_i times the tube margin. The
// share problem is linear only for fixed shares, so the tightened sets are found by a
// short fixed-point iteration; if none is self-consistent the plain optimum is used and
// the medium level settles on the closest admissible target instead.
struct Margins {
    double u = 0.0;
    double y = 0.0;
    const std::vector<double>* bias = nullptr;
};

HLConfig backed_off(const HLConfig& hl, const std::vector<BoilerStatic>& models, const std::vector<double>& alpha,
                    const Margins& m)
{
    HLConfig h = hl;
    h.U_bar = hl.U_bar.shrink(m.u);
    h.Y_bar = hl.Y_bar.shrink(m.y);
    for (std::size_t i = 0; i < models.size(); ++i) {
        h.U[i] = hl.U[i].shrink(alpha[i] * m.u);
        h.Y[i] = hl.Y[i].shrink(models[i].g * alpha[i] * m.u + (*m.bias)[i]);
    }
    return h;
}

bool fits_backed_off(const ShareSolution& s, const HLConfig& hl, const std::vector<BoilerStatic>& models,
                     const Margins& m)
{
    return check_share_solution(s, models, backed_off(hl, models, s.alpha, m), std::nullopt, 1e-9).empty();
}

ShareSolution backoff_iteration(double demand, const std::vector<BoilerStatic>& models, const HLConfig& hl,
                                const std::optional<ShareSolution>& old, const Margins& m)
{
    const ShareSolution plain = solve_shares(demand, models, hl, old);
    ShareSolution cur = plain;
    for (int it = 0; it < 12; ++it) {
        if (fits_backed_off(cur, hl, models, m))
            return cur;
        try {
            cur = solve_shares(demand, models, backed_off(hl, models, cur.alpha, m), old);
        } catch (const InfeasibleError&) {
            break;
        }
    }
    return plain;
}

// Prefers shares under which the running input u_now stays admissible, so the medium
// level can take over without a jump; drops that requirement when it cannot be met.
ShareSolution solve_with_backoff(double demand, const std::vector<BoilerStatic>& models, const HLConfig& hl,
                                 const std::optional<ShareSolution>& old, const Margins& m, double u_now)
{
    if (u_now > 0.0) {
        HLConfig h = hl;
        h.handoff_u = u_now;
        try {
            return backoff_iteration(demand, models, h, old, m);
        } catch (const InfeasibleError&) {
        }
    }
    return backoff_iteration(demand, models, hl, old, m);
}

bool shares_differ(const ShareSolution& a, const ShareSolution& b)
{
    if (a.delta != b.delta)
        return true;
    for (std::size_t i = 0; i < a.alpha.size(); ++i)
        if (std::abs(a.alpha[i] - b.alpha[i]) > 1e-9)
            return true;
    return false;
}

std::string time_prefix(double t)
{
    std::ostringstream os;
    os << "t=" << t << " s: ";
    return os.str();
}

} // namespace

RunReport run_scenario(const ScenarioConfig& cfg, const IdentificationResult* ident_in)
{
    const auto wall_start = std::chrono::steady_clock::now();
    cfg.validate();
    std::optional<IdentificationResult> owned;
    if (!ident_in) {
        owned = run_identification(cfg);
        ident_in = &*owned;
    }
    const IdentificationResult& ident = *ident_in;
    const std::size_t N_g = cfg.boilers.size();
    if (ident.boilers.size() != N_g)
        throw ContractError("run_scenario: identification does not match the configured boilers");
    const int nu = cfg.nu();

    std::vector<BoilerStatic> models;
    std::vector<StateSpaceModel> ss;
    for (const auto& ib : ident.boilers) {
        models.push_back({ib.g, ib.gamma});
        ss.push_back(ib.ss);
    }
    const ArxModel& tmpl = ident.boilers[static_cast<std::size_t>(cfg.template_boiler)].arx;
    std::vector<ReferenceModel> refs;
    for (std::size_t i = 0; i < N_g; ++i)
        refs.push_back(with_context("boiler " + std::to_string(i + 1) + ": ", [&] { return make_reference(ss[i], tmpl); }));

    DisturbanceOptions dopt;
    dopt.nu = nu;
    const DisturbanceBound bound = estimate_disturbance_bound(refs, ss, cfg.delta_u, 1.0, dopt);

    HLConfig hl;
    MpcConstraints cons;
    hl.U_bar = cons.U_bar = cfg.U_bar;
    hl.Y_bar = cons.Y_bar = cfg.Y_bar;
    hl.delta_u = cons.delta_u = cfg.delta_u;
    hl.lambda_bar = cfg.lambda_bar;
    hl.trigger_threshold = cfg.trigger_threshold;
    hl.T = cfg.T;
    hl.T_HL = cfg.hl_multiplier * cfg.T;
    for (std::size_t i = 0; i < N_g; ++i) {
        const auto& b = cfg.boilers[i];
        hl.lambda.push_back(b.lambda_cost);
        hl.U.push_back({b.q_s_min, b.q_s_max});
        hl.Y.push_back({b.q_g_min, b.q_g_max});
        cons.bias_bound.push_back(ident.boilers[i].bias_bound);
    }
    cons.U = hl.U;
    cons.Y = hl.Y;

    RunReport rep;
    rep.n_boilers = static_cast<int>(N_g);
    rep.w_bound = bound.w_inf;

    // Initial high-level solution and plants at rest.
    double last_demand = demand_at(cfg.demand, 0.0);
    ShareSolution shares = with_context(time_prefix(0.0), [&] { return solve_shares(last_demand, models, hl); });
    Stack st = with_context(time_prefix(0.0), [&] {
        return build_stack(refs, shares, nu, bound.w_box, cons, models, cfg.mpc);
    });
    auto margins = [&] { return Margins{st.sets.margin_u, st.sets.margin_y, &cons.bias_bound}; };
    shares = with_context(time_prefix(0.0), [&] {
        return solve_with_backoff(last_demand, models, hl, std::nullopt, margins(), 0.0);
    });
    st = with_context(time_prefix(0.0), [&] {
        return build_stack(refs, shares, nu, bound.w_box, cons, models, cfg.mpc);
    });
    ++rep.hl_solve_count;
    rep.hl_events.push_back({0.0, shares.delta, shares.alpha, shares.u_ss, last_demand});
    long last_k = 0;

    std::vector<double> standby(N_g);
    std::vector<Plant> plants(N_g);
    const int pre = std::max(cfg.identification.n_f, cfg.identification.n_b) + nu + 2;
    for (std::size_t i = 0; i < N_g; ++i) {
        const auto& b = cfg.boilers[i];
        standby[i] = standby_flow(b, models[i], cfg.standby_margin);
        const double q = shares.delta[i] ? shares.alpha[i] * shares.u_ss : standby[i];
        plants[i].loop = make_equilibrium(b, loop_config(cfg, b), q, cfg.V_w_fraction * b.V_T);
        const double y0 = peek_gas_flow(plants[i].loop);
        plants[i].y_hist.assign(static_cast<std::size_t>(pre) - 1, y0);
        plants[i].u_hist.assign(static_cast<std::size_t>(pre) - 1, q);
    }

    auto x_hat_at = [&](std::size_t i, std::size_t y_len) {
        const auto& pl = plants[i];
        const std::span<const double> yh(pl.y_hist.data(), y_len);
        const std::span<const double> uh(pl.u_hist.data(), y_len - 1);
        return Eigen::VectorXd(refs[i].beta * state_from_history(ss[i], yh, uh));
    };

    double u_prev = shares.u_ss;
    double r_hat = st.r;
    double r_target = st.r;
    std::optional<ShareSolution> pending;
    std::vector<double> cmd(N_g, 0.0);
    const long n_fast = static_cast<long>(std::floor(cfg.duration_s / cfg.tau + 1e-9));
    auto violation = [&](double t, const std::string& what) {
        ++rep.violations;
        if (rep.violation_log.size() < 1000)
            rep.violation_log.push_back(time_prefix(t) + what);
    };

    for (long kf = 0; kf < n_fast; ++kf) {
        const double t = static_cast<double>(kf) * cfg.tau;
        for (auto& pl : plants)
            pl.y_hist.push_back(peek_gas_flow(pl.loop));

        if (kf % nu == 0) {
            const long k = kf / nu;
            const std::size_t y_len = plants.front().y_hist.size();
            std::vector<Eigen::VectorXd> xh_now(N_g), xh_prev(N_g);
            for (std::size_t i = 0; i < N_g; ++i) {
                xh_now[i] = x_hat_at(i, y_len);
                xh_prev[i] = x_hat_at(i, y_len - static_cast<std::size_t>(nu));
            }
            const Eigen::VectorXd x_now = ensemble_state(refs, shares.delta, xh_now);
            const Eigen::VectorXd x_prev = ensemble_state(refs, shares.delta, xh_prev);
            if (k > 0) {
                const Eigen::VectorXd w = one_step_mismatch(st.ens.A_T, st.ens.B_T, x_prev, u_prev, x_now);
                rep.max_w_inf = std::max(rep.max_w_inf, w.cwiseAbs().maxCoeff());
            }

            const double demand = demand_at(cfg.demand, t);
            Eigen::VectorXd xi = velocity_state(st.ens, x_now, x_prev);
            if (k > 0 && should_trigger(demand, last_demand, k, last_k, hl)) {
                ShareSolution next = with_context(time_prefix(t), [&] {
                    return solve_with_backoff(demand, models, hl, shares, margins(), u_prev);
                });
                ++rep.hl_solve_count;
                last_demand = demand;
                last_k = k;
                if (shares_differ(next, shares)) {
                    pending = std::move(next);
                } else {
                    // Same pattern: only the steady target moves, the ensemble model stays.
                    pending.reset();
                    shares.u_ss = next.u_ss;
                    shares.cost = next.cost;
                    st.r = st.ens.g * shares.u_ss + st.ens.gamma;
                }
            }

            // A new share pattern is handed over only once the medium level can start
            // from the current state under it; until then the running configuration
            // ramps towards the new target.
            std::optional<MpcSolution> sol;
            r_target = st.r;
            if (pending) {
                Stack next_st = with_context(time_prefix(t), [&] {
                    return build_stack(refs, *pending, nu, bound.w_box, cons, models, cfg.mpc);
                });
                const Reconfigured rc = reconfigure(xi, u_prev, shares, *pending, refs, xh_now, xh_prev);
                const double scale = reconfiguration_rate_scale(shares, *pending);
                try {
                    sol = solve_mpc(next_st.vm, rc.xi, rc.u_prev, next_st.r, next_st.sets, cfg.mpc, scale);
                    rep.hl_events.push_back({t, pending->delta, pending->alpha, pending->u_ss, demand});
                    shares = *pending;
                    pending.reset();
                    st = std::move(next_st);
                    r_target = st.r;
                    u_prev = rc.u_prev;
                } catch (const InfeasibleError&) {
                    ++rep.deferred_handoffs;
                    r_target = st.ens.g * pending->u_ss + st.ens.gamma;
                }
            }
            if (!sol)
                sol = with_context(time_prefix(t), [&] {
                    return solve_mpc(st.vm, xi, u_prev, r_target, st.sets, cfg.mpc, 1.0);
                });
            ++rep.mpc_solves;
            if (k > 0) {
                const double rate = std::abs(sol->u_applied - u_prev);
                rep.max_rate = std::max(rep.max_rate, rate);
                if (rate > cfg.delta_u + 1e-9)
                    violation(t, "input rate " + std::to_string(rate));
            }
            u_prev = sol->u_applied;
            r_hat = sol->r_hat;
            double total = 0.0;
            for (std::size_t i = 0; i < N_g; ++i) {
                cmd[i] = shares.delta[i] ? shares.alpha[i] * u_prev : standby[i];
                if (shares.delta[i])
                    total += cmd[i];
            }
            if (std::abs(total - u_prev) > 1e-12 * std::max(1.0, u_prev))
                violation(t, "per-boiler commands do not add up to the ensemble input");
        }

        StepRecord rec;
        rec.t_s = t;
        rec.demand = demand_at(cfg.demand, t);
        rec.r = r_target;
        rec.r_hat = r_hat;
        rec.u_bar = u_prev;
        rec.u_ss = shares.u_ss;
        rec.alpha = shares.alpha;
        rec.delta = shares.delta;
        for (std::size_t i = 0; i < N_g; ++i) {
            auto& pl = plants[i];
            const double p = pl.loop.plant.p;
            const double Vw = pl.loop.plant.V_w;
            const ClosedLoopSample s = with_context(time_prefix(t), [&] { return closed_loop_step(pl.loop, cmd[i]); });
            pl.u_hist.push_back(cmd[i]);
            rec.qs.push_back(s.q_s);
            rec.qg.push_back(s.q_g);
            rec.qf.push_back(s.q_f);
            rec.p.push_back(p);
            rec.Vw.push_back(Vw);
            const auto& b = cfg.boilers[i];
            const std::string tag = " of boiler " + std::to_string(i + 1);
            if (!Interval{b.q_s_min, b.q_s_max}.contains(s.q_s, 1e-9))
                violation(t, "steam flow " + std::to_string(s.q_s) + tag);
            if (!Interval{b.q_g_min, b.q_g_max}.contains(s.q_g, 1e-9))
                violation(t, "gas flow " + std::to_string(s.q_g) + tag);
            if (shares.delta[i]) {
                rec.y_bar += s.q_g;
                rep.total_steam_kg += s.q_s * cfg.tau;
            }
            rep.total_gas_kg += s.q_g * cfg.tau;
        }
        if (!cfg.Y_bar.contains(rec.y_bar, 1e-9))
            violation(t, "ensemble gas flow " + std::to_string(rec.y_bar));
        if (!cfg.U_bar.contains(rec.u_bar, 1e-9))
            violation(t, "ensemble steam flow " + std::to_string(rec.u_bar));
        rep.steps.push_back(std::move(rec));
    }

    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_start).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Outputs

namespace {

std::string g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << content;
    if (!out)
        throw IoError("failed while writing " + path.string());
}

void prepare_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

} // namespace

std::string timeseries_csv(const RunReport& rep)
{
    std::ostringstream o;
    o << "t_s,demand_kgps,r_kgps,r_hat_kgps,u_bar_kgps,y_bar_kgps,u_ss_kgps";
    for (int i = 1; i <= rep.n_boilers; ++i)
        o << ",alpha_" << i << ",delta_" << i << ",qs_" << i << ",qg_" << i << ",qf_" << i << ",p_" << i
          << "_bar,Vw_" << i << "_m3";
    o << '\n';
    for (const auto& s : rep.steps) {
        o << g17(s.t_s) << ',' << g17(s.demand) << ',' << g17(s.r) << ',' << g17(s.r_hat) << ',' << g17(s.u_bar)
          << ',' << g17(s.y_bar) << ',' << g17(s.u_ss);
        for (std::size_t i = 0; i < s.alpha.size(); ++i)
            o << ',' << g17(s.alpha[i]) << ',' << s.delta[i] << ',' << g17(s.qs[i]) << ',' << g17(s.qg[i]) << ','
              << g17(s.qf[i]) << ',' << g17(s.p[i]) << ',' << g17(s.Vw[i]);
        o << '\n';
    }
    return o.str();
}

std::string summary_json(const RunReport& rep)
{
    json j;
    j["violations"] = rep.violations;
    j["max_w_inf"] = rep.max_w_inf;
    j["total_gas_kg"] = rep.total_gas_kg;
    j["total_steam_kg"] = rep.total_steam_kg;
    j["hl_solve_count"] = rep.hl_solve_count;
    j["wall_ms"] = rep.wall_ms;
    return j.dump(2) + "\n";
}

void emit_outputs(const RunReport& rep, const ScenarioConfig& cfg, const std::filesystem::path& dir)
{
    prepare_dir(dir);
    write_file(dir / "timeseries.csv", timeseries_csv(rep));
    write_file(dir / "summary.json", summary_json(rep));

    std::vector<double> t;
    for (const auto& s : rep.steps)
        t.push_back(s.t_s);
    auto column = [&](auto get) {
        std::vector<double> v;
        for (const auto& s : rep.steps)
            v.push_back(get(s));
        return v;
    };

    svg::Chart ens;
    ens.title = "Ensemble tracking";
    svg::Panel gas{"Gas flow", "kg/s", {}, {}, {}};
    gas.series.push_back({"y_bar", t, column([](const StepRecord& s) { return s.y_bar; }), svg::palette(0)});
    gas.series.push_back({"r", t, column([](const StepRecord& s) { return s.r; }), svg::palette(1), true, true});
    gas.series.push_back({"r_hat", t, column([](const StepRecord& s) { return s.r_hat; }), svg::palette(2), true});
    svg::Panel steam{"Steam flow", "kg/s", {}, {}, {}};
    steam.series.push_back({"u_bar", t, column([](const StepRecord& s) { return s.u_bar; }), svg::palette(0), true});
    steam.series.push_back({"demand", t, column([](const StepRecord& s) { return s.demand; }), svg::palette(1), true, true});
    steam.series.push_back({"u_ss", t, column([](const StepRecord& s) { return s.u_ss; }), svg::palette(2), true});
    ens.panels = {gas, steam};
    write_file(dir / "ensemble.svg", svg::render(ens));

    svg::Chart sh;
    sh.title = "Sharing factors";
    svg::Panel bands{"alpha (stacked)", "share", {}, {}, t};
    for (int i = 0; i < rep.n_boilers; ++i)
        bands.bands.push_back({"boiler " + std::to_string(i + 1),
                               column([i](const StepRecord& s) { return s.alpha[static_cast<std::size_t>(i)]; }),
                               svg::palette(static_cast<std::size_t>(i))});
    sh.panels = {bands};
    write_file(dir / "shares.svg", svg::render(sh));

    svg::Chart bo;
    bo.title = "Generator gas flows";
    bo.panel_height = 150;
    for (int i = 0; i < rep.n_boilers; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        svg::Panel p{"boiler " + std::to_string(i + 1), "q_g [kg/s]", {}, {}, {}};
        p.series.push_back({"q_g", t, column([iu](const StepRecord& s) { return s.qg[iu]; }), svg::palette(iu)});
        if (iu < cfg.boilers.size() && !t.empty()) {
            const auto& b = cfg.boilers[iu];
            p.series.push_back({"bounds", {t.front(), t.back()}, {b.q_g_min, b.q_g_min}, "#777777", false, true});
            p.series.push_back({"", {t.front(), t.back()}, {b.q_g_max, b.q_g_max}, "#777777", false, true});
        }
        bo.panels.push_back(p);
    }
    write_file(dir / "boilers.svg", svg::render(bo));
}

void emit_identification(const IdentificationResult& ident, const std::filesystem::path& dir)
{
    prepare_dir(dir);
    json models = json::array();
    for (std::size_t i = 0; i < ident.boilers.size(); ++i) {
        const auto& b = ident.boilers[i];
        models.push_back({{"boiler", i + 1},
                          {"f", b.arx.f},
                          {"b", b.arx.b},
                          {"gamma", b.arx.gamma},
                          {"n_k", b.arx.n_k},
                          {"tau_s", b.arx.tau},
                          {"static_gain", b.g},
                          {"fit_percent", b.fit_percent},
                          {"bias_bound", b.bias_bound}});
    }
    write_file(dir / "models.json", json{{"models", models}}.dump(2) + "\n");

    std::ostringstream o;
    o << "t_s";
    for (std::size_t i = 1; i <= ident.boilers.size(); ++i)
        o << ",qs_" << i << ",qg_" << i;
    o << '\n';
    std::size_t n = 0;
    for (const auto& b : ident.boilers)
        n = std::max(n, b.u.size());
    for (std::size_t k = 0; k < n; ++k) {
        o << g17(static_cast<double>(k) * ident.tau);
        for (const auto& b : ident.boilers) {
            if (k < b.u.size())
                o << ',' << g17(b.u[k]) << ',' << g17(b.y[k]);
            else
                o << ",,";
        }
        o << '\n';
    }
    write_file(dir / "identification.csv", o.str());
}

} // namespace steamnet
