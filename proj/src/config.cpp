#include "dems/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dems/dataset_io.hpp"
#include "dems/errors.hpp"

namespace dems {

using json = nlohmann::json;

namespace {

const std::set<std::string> kKeys{
    "scenario", "plant", "input", "s_real", "s_assumed", "log_prec_w", "log_prec_z",
    "p", "d", "k_x", "s_init", "s_min", "s_max", "prior_eta", "prior_precision",
    "T", "dt", "seed", "seeds", "s_values", "p_values", "assumed_s", "methods", "sa_order",
    "s_grid", "t_eval", "samples"};

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw ValidationError("config: `" + key + "` " + why);
}

template <typename T>
T read_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        bad_key(key, "has the wrong type");
    }
}

template <typename T>
void read_into(const json& obj, const std::string& key, T& target) {
    if (auto it = obj.find(key); it != obj.end()) {
        target = read_as<T>(*it, key);
    }
}

template <typename T>
void read_into(const json& obj, const std::string& key, std::optional<T>& target) {
    if (auto it = obj.find(key); it != obj.end()) {
        target = read_as<T>(*it, key);
    }
}

Matrix read_matrix(const json& j, const std::string& key) {
    const auto rows = read_as<std::vector<std::vector<double>>>(j, key);
    if (rows.empty()) {
        return Matrix(0, 0);
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            bad_key(key, "rows have different lengths");
        }
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    return m;
}

json write_matrix(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            row.push_back(m(i, k));
        }
        rows.push_back(row);
    }
    return rows;
}

bool known_scenario(const std::string& name) {
    return name == "paper_system" || name == "quadrotor";
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    const auto end = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

} // namespace

void RunConfig::validate() const {
    if (!plant && !known_scenario(scenario)) {
        bad_key("scenario", "names an unknown scenario '" + scenario + "'");
    }
    if (plant) {
        try {
            plant->validate();
        } catch (const ValidationError& e) {
            bad_key("plant", std::string("is invalid: ") + e.what());
        }
    }
    if (input != "scenario" && input != "bump" && input != "zero") {
        bad_key("input", "must be one of scenario, bump, zero");
    }
    if (plant && !known_scenario(scenario) && input == "scenario") {
        bad_key("input", "must be bump or zero for an inline plant without a known scenario");
    }
    if (s_real && !(*s_real > 0.0 && *s_real <= 1.0)) bad_key("s_real", "must lie in (0, 1]");
    if (s_assumed && !(*s_assumed > 0.0 && *s_assumed <= 1.0)) bad_key("s_assumed", "must lie in (0, 1]");
    if (!std::isfinite(log_prec_w)) bad_key("log_prec_w", "must be finite");
    if (!std::isfinite(log_prec_z)) bad_key("log_prec_z", "must be finite");
    if (p < 0) bad_key("p", "must be non-negative");
    if (d < 0) bad_key("d", "must be non-negative");
    if (!(std::isfinite(k_x) && k_x >= 0.0)) bad_key("k_x", "must be finite and non-negative");
    if (!(s_min > 0.0 && s_min <= 1.0)) bad_key("s_min", "must lie in (0, 1]");
    if (!(s_max >= s_min && s_max <= 1.0)) bad_key("s_max", "must lie in [s_min, 1]");
    if (!(s_init >= s_min && s_init <= s_max)) bad_key("s_init", "must lie in [s_min, s_max]");
    if (!std::isfinite(prior_eta)) bad_key("prior_eta", "must be finite");
    if (!(prior_precision > 0.0 && std::isfinite(prior_precision))) bad_key("prior_precision", "must be positive");
    if (!(dt > 0.0 && std::isfinite(dt))) bad_key("dt", "must be positive");
    if (!(T > dt && std::isfinite(T))) bad_key("T", "must exceed dt");
    if (seeds && *seeds < 1) bad_key("seeds", "must be at least 1");
    if (s_values) {
        if (s_values->empty()) bad_key("s_values", "must not be empty");
        for (double s : *s_values) {
            if (!(s > 0.0 && s <= 1.0)) bad_key("s_values", "entries must lie in (0, 1]");
        }
    }
    if (p_values) {
        if (p_values->empty()) bad_key("p_values", "must not be empty");
        for (int v : *p_values) {
            if (v < 0) bad_key("p_values", "entries must be non-negative");
        }
    }
    if (assumed_s) {
        if (assumed_s->empty()) bad_key("assumed_s", "must not be empty");
        for (double s : *assumed_s) {
            if (!(s > 0.0 && s <= 1.0)) bad_key("assumed_s", "entries must lie in (0, 1]");
        }
    }
    if (methods) {
        if (methods->empty()) bad_key("methods", "must not be empty");
        for (const auto& m : *methods) {
            try {
                parse_method(m);
            } catch (const ValidationError&) {
                bad_key("methods", "contains unknown method '" + m + "'");
            }
        }
    }
    if (sa_order < 1) bad_key("sa_order", "must be at least 1");
    if (!(s_grid_lo > 0.0 && s_grid_step > 0.0 && s_grid_hi >= s_grid_lo && s_grid_hi <= 1.0)) {
        bad_key("s_grid", "must satisfy 0 < lo <= hi <= 1 and step > 0");
    }
    if (t_eval.empty()) bad_key("t_eval", "must not be empty");
    for (double t : t_eval) {
        if (!(t >= 0.0 && std::isfinite(t))) bad_key("t_eval", "entries must be non-negative");
    }
    if (samples < 1) bad_key("samples", "must be at least 1");
}

RunConfig default_config(const std::string& scenario) {
    RunConfig cfg;
    cfg.scenario = scenario;
    if (known_scenario(scenario)) {
        const Scenario sc = make_scenario(scenario);
        cfg.T = sc.T;
        cfg.dt = sc.dt;
        cfg.p = sc.p;
        cfg.d = sc.d;
        cfg.log_prec_w = sc.log_prec_w;
        cfg.log_prec_z = sc.log_prec_z;
    }
    return cfg;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ValidationError("config parse error at line " + std::to_string(line_of(text, e.byte)) + ": " +
                              e.what());
    }
    if (!j.is_object()) {
        throw ValidationError("config: top level must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!kKeys.count(it.key())) {
            bad_key(it.key(), "is not a known key");
        }
    }

    std::string scenario = "paper_system";
    read_into(j, "scenario", scenario);
    RunConfig cfg = default_config(scenario);

    if (auto it = j.find("plant"); it != j.end()) {
        if (!it->is_object()) bad_key("plant", "must be an object with A, B, C");
        for (auto pit = it->begin(); pit != it->end(); ++pit) {
            if (pit.key() != "A" && pit.key() != "B" && pit.key() != "C") {
                bad_key("plant." + pit.key(), "is not a known key");
            }
        }
        LinearPlant plant;
        for (const char* name : {"A", "B", "C"}) {
            if (!it->contains(name)) bad_key(std::string("plant.") + name, "is required");
        }
        plant.A = read_matrix(it->at("A"), "plant.A");
        plant.B = read_matrix(it->at("B"), "plant.B");
        plant.C = read_matrix(it->at("C"), "plant.C");
        cfg.plant = plant;
    }
    read_into(j, "input", cfg.input);
    read_into(j, "s_real", cfg.s_real);
    read_into(j, "s_assumed", cfg.s_assumed);
    read_into(j, "log_prec_w", cfg.log_prec_w);
    read_into(j, "log_prec_z", cfg.log_prec_z);
    read_into(j, "p", cfg.p);
    read_into(j, "d", cfg.d);
    read_into(j, "k_x", cfg.k_x);
    read_into(j, "s_init", cfg.s_init);
    read_into(j, "s_min", cfg.s_min);
    read_into(j, "s_max", cfg.s_max);
    read_into(j, "prior_eta", cfg.prior_eta);
    read_into(j, "prior_precision", cfg.prior_precision);
    read_into(j, "T", cfg.T);
    read_into(j, "dt", cfg.dt);
    read_into(j, "seed", cfg.seed);
    read_into(j, "seeds", cfg.seeds);
    read_into(j, "s_values", cfg.s_values);
    read_into(j, "p_values", cfg.p_values);
    read_into(j, "assumed_s", cfg.assumed_s);
    read_into(j, "methods", cfg.methods);
    read_into(j, "sa_order", cfg.sa_order);
    if (auto it = j.find("s_grid"); it != j.end()) {
        if (!it->is_object()) bad_key("s_grid", "must be an object with lo, hi, step");
        for (auto git = it->begin(); git != it->end(); ++git) {
            if (git.key() != "lo" && git.key() != "hi" && git.key() != "step") {
                bad_key("s_grid." + git.key(), "is not a known key");
            }
        }
        read_into(*it, "lo", cfg.s_grid_lo);
        read_into(*it, "hi", cfg.s_grid_hi);
        read_into(*it, "step", cfg.s_grid_step);
    }
    read_into(j, "t_eval", cfg.t_eval);
    read_into(j, "samples", cfg.samples);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["scenario"] = cfg.scenario;
    if (cfg.plant) {
        j["plant"] = {{"A", write_matrix(cfg.plant->A)},
                      {"B", write_matrix(cfg.plant->B)},
                      {"C", write_matrix(cfg.plant->C)}};
    }
    j["input"] = cfg.input;
    if (cfg.s_real) j["s_real"] = *cfg.s_real;
    if (cfg.s_assumed) j["s_assumed"] = *cfg.s_assumed;
    j["log_prec_w"] = cfg.log_prec_w;
    j["log_prec_z"] = cfg.log_prec_z;
    j["p"] = cfg.p;
    j["d"] = cfg.d;
    j["k_x"] = cfg.k_x;
    j["s_init"] = cfg.s_init;
    j["s_min"] = cfg.s_min;
    j["s_max"] = cfg.s_max;
    j["prior_eta"] = cfg.prior_eta;
    j["prior_precision"] = cfg.prior_precision;
    j["T"] = cfg.T;
    j["dt"] = cfg.dt;
    j["seed"] = cfg.seed;
    if (cfg.seeds) j["seeds"] = *cfg.seeds;
    if (cfg.s_values) j["s_values"] = *cfg.s_values;
    if (cfg.p_values) j["p_values"] = *cfg.p_values;
    if (cfg.assumed_s) j["assumed_s"] = *cfg.assumed_s;
    if (cfg.methods) j["methods"] = *cfg.methods;
    j["sa_order"] = cfg.sa_order;
    j["s_grid"] = {{"lo", cfg.s_grid_lo}, {"hi", cfg.s_grid_hi}, {"step", cfg.s_grid_step}};
    j["t_eval"] = cfg.t_eval;
    j["samples"] = cfg.samples;
    return j.dump(2) + "\n";
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    write_text_file(path, config_to_json(cfg));
}

double require_s_real(const RunConfig& cfg) {
    if (!cfg.s_real) {
        bad_key("s_real", "is required by this command");
    }
    return *cfg.s_real;
}

Scenario resolve_scenario(const RunConfig& cfg) {
    Scenario sc;
    if (known_scenario(cfg.scenario)) {
        sc = make_scenario(cfg.scenario);
    } else {
        sc.name = cfg.scenario;
    }
    if (cfg.plant) {
        sc.plant = *cfg.plant;
    }
    if (cfg.input == "bump") {
        sc.input = [](double t, const Vector&) { return gaussian_bump_input(t); };
    } else if (cfg.input == "zero") {
        const Eigen::Index r = sc.plant.r();
        sc.input = [r](double, const Vector&) { return Vector::Zero(r).eval(); };
    }
    if (cfg.input == "bump") {
        require(sc.plant.r() == 1, "config: `input` bump needs a plant with one input");
    }
    sc.T = cfg.T;
    sc.dt = cfg.dt;
    sc.p = cfg.p;
    sc.d = cfg.d;
    sc.log_prec_w = cfg.log_prec_w;
    sc.log_prec_z = cfg.log_prec_z;
    return sc;
}

StudySettings to_settings(const RunConfig& cfg) {
    StudySettings s;
    s.scenario = cfg.scenario;
    s.T = cfg.T;
    s.dt = cfg.dt;
    s.p = cfg.p;
    s.d = cfg.d;
    s.k_x = cfg.k_x;
    s.s_init = cfg.s_init;
    s.s_min = cfg.s_min;
    s.s_max = cfg.s_max;
    s.prior.eta_s = cfg.prior_eta;
    s.prior.prec_s = cfg.prior_precision;
    s.log_prec_w = cfg.log_prec_w;
    s.log_prec_z = cfg.log_prec_z;
    s.sa_order = cfg.sa_order;
    s.master_seed = cfg.seed;
    return s;
}

} // namespace dems
