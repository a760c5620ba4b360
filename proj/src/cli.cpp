#include "dems/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "dems/config.hpp"
#include "dems/dataset_io.hpp"
#include "dems/errors.hpp"

namespace dems {

using json = nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool timing = false;
};

struct EstimateArgs {
    std::string method;
    std::string data_path;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "JSON run configuration");
    sub->add_option("--out", args.out_path, "output CSV path")->required();
    sub->add_option("--seed", args.seed, "master seed override");
    sub->add_option("--jobs", args.jobs, "worker threads (default: DEMS_LAB_JOBS or 1)");
    sub->add_flag("--timing", args.timing, "record wall-clock runtimes (output is then not reproducible)");
}

int resolve_jobs(const CommonArgs& args) {
    int jobs = 1;
    if (args.jobs) {
        jobs = *args.jobs;
    } else if (const char* env = std::getenv("DEMS_LAB_JOBS"); env && *env) {
        try {
            std::size_t used = 0;
            jobs = std::stoi(env, &used);
            require(used == std::string(env).size(), "");
        } catch (const std::exception&) {
            throw ValidationError("DEMS_LAB_JOBS must be a positive integer");
        }
    }
    require(jobs >= 1, "--jobs must be at least 1");
    return jobs;
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? default_config("paper_system") : load_config(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
    }
    cfg.validate();
    return cfg;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

json meta_json(const DatasetMeta& m) {
    json j;
    j["scenario"] = m.scenario;
    j["seed"] = m.seed;
    if (!std::isnan(m.s_real)) j["s_real"] = m.s_real;
    if (!std::isnan(m.log_prec_w)) j["log_prec_w"] = m.log_prec_w;
    if (!std::isnan(m.log_prec_z)) j["log_prec_z"] = m.log_prec_z;
    return j;
}

json failed_cells(const std::vector<BenchmarkRecord>& records) {
    json cells = json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.error.empty()) {
            continue;
        }
        json c;
        c["index"] = i;
        c["method"] = r.method;
        c["s_real"] = r.s_real;
        c["seed"] = r.seed;
        c["p"] = r.p;
        if (r.s_assumed) c["s_assumed"] = *r.s_assumed;
        c["error"] = r.error;
        cells.push_back(c);
    }
    return cells;
}

// Writes the output file and its `<out>.meta.json` sidecar.
void emit(const std::string& out_path, const std::string& body, const std::string& command,
          const RunConfig& cfg, json extra) {
    write_text_file(out_path, body);
    const std::string canonical = config_to_json(cfg);
    json meta;
    meta["tool"] = "dems_lab";
    meta["version"] = kToolVersion;
    meta["command"] = command;
    meta["master_seed"] = cfg.seed;
    meta["config_hash"] = hex64(fnv1a64(canonical));
    meta["config"] = json::parse(canonical);
    for (auto it = extra.begin(); it != extra.end(); ++it) {
        meta[it.key()] = it.value();
    }
    write_text_file(out_path + ".meta.json", meta.dump(2) + "\n");
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

void print_median_table(std::ostream& out, const std::vector<BenchmarkRecord>& records,
                        const std::vector<double>& s_values, const std::vector<std::string>& columns,
                        const std::function<bool(const BenchmarkRecord&, const std::string&)>& match) {
    out << "median SSE\ns_real";
    for (const auto& c : columns) out << '\t' << c;
    out << '\n';
    for (double s : s_values) {
        out << fmt(s);
        for (const auto& c : columns) {
            out << '\t'
                << fmt(median_sse(records, [&](const BenchmarkRecord& r) { return r.s_real == s && match(r, c); }));
        }
        out << '\n';
    }
}

int cmd_simulate(const CommonArgs& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    const double s_real = require_s_real(cfg);
    const Scenario sc = resolve_scenario(cfg);
    const Dataset data = simulate_scenario(sc, to_settings(cfg), s_real, cfg.seed);
    std::ostringstream body;
    write_dataset_csv(body, data);
    emit(args.out_path, body.str(), "simulate", cfg, {{"dataset", meta_json(data.meta)}, {"samples", data.size()}});
    out << "wrote " << data.size() << " samples to " << args.out_path << '\n';
    return kExitOk;
}

int cmd_estimate(const CommonArgs& args, const EstimateArgs& est, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    const Method method = parse_method(est.method);
    const Scenario sc = resolve_scenario(cfg);
    const Dataset data = load_dataset(est.data_path);
    double s_value = 0.0;
    if (method == Method::DEMFixed || method == Method::SA || method == Method::SMIKF) {
        s_value = cfg.s_assumed ? *cfg.s_assumed : require_s_real(cfg);
    }
    const TrialResult res = run_method(method, sc.plant, data, to_settings(cfg), s_value);
    std::ostringstream body;
    write_estimates_csv(body, data.times, res);
    json extra;
    extra["method"] = method_name(method);
    extra["samples"] = data.size();
    if (method == Method::DEMFixed || method == Method::SA || method == Method::SMIKF) {
        extra["s_value"] = s_value;
    }
    out << method_name(method) << ": " << data.size() << " samples";
    if (res.sse) {
        extra["sse"] = *res.sse;
        out << ", sse " << fmt(*res.sse);
    }
    if (!res.s_traj.empty()) {
        extra["final_s"] = res.s_traj.back();
        out << ", final s " << fmt(res.s_traj.back());
    }
    out << '\n';
    emit(args.out_path, body.str(), "estimate", cfg, extra);
    return kExitOk;
}

int cmd_benchmark(const CommonArgs& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    BenchmarkConfig bc;
    bc.settings = to_settings(cfg);
    bc.settings.jobs = resolve_jobs(args);
    bc.settings.timing = args.timing;
    bc.scenario = resolve_scenario(cfg);
    if (cfg.s_values) bc.s_values = *cfg.s_values;
    if (cfg.seeds) bc.seeds = *cfg.seeds;
    if (cfg.methods) {
        bc.methods.clear();
        for (const auto& m : *cfg.methods) bc.methods.push_back(parse_method(m));
    }
    const auto records = benchmark_suite(bc);
    std::ostringstream body;
    write_records_csv(body, records, false);
    emit(args.out_path, body.str(), "benchmark", cfg, {{"failed_cells", failed_cells(records)}});
    std::vector<std::string> names;
    for (Method m : bc.methods) names.push_back(method_name(m));
    print_median_table(out, records, bc.s_values, names,
                       [](const BenchmarkRecord& r, const std::string& c) { return r.method == c; });
    return kExitOk;
}

int cmd_sweep_embedding(const CommonArgs& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    EmbeddingSweepConfig ec;
    ec.settings = to_settings(cfg);
    ec.settings.jobs = resolve_jobs(args);
    ec.settings.timing = args.timing;
    ec.scenario = resolve_scenario(cfg);
    if (cfg.s_values) ec.s_values = *cfg.s_values;
    if (cfg.p_values) ec.p_values = *cfg.p_values;
    if (cfg.seeds) ec.seeds = *cfg.seeds;
    const auto records = embedding_sweep(ec);
    std::ostringstream body;
    write_records_csv(body, records, false);
    emit(args.out_path, body.str(), "sweep-embedding", cfg, {{"failed_cells", failed_cells(records)}});
    std::vector<std::string> names;
    for (int p : ec.p_values) names.push_back("p=" + std::to_string(p));
    print_median_table(out, records, ec.s_values, names, [](const BenchmarkRecord& r, const std::string& c) {
        return "p=" + std::to_string(r.p) == c;
    });
    return kExitOk;
}

int cmd_sweep_mismatch(const CommonArgs& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    MismatchSweepConfig mc;
    mc.settings = to_settings(cfg);
    mc.settings.jobs = resolve_jobs(args);
    mc.settings.timing = args.timing;
    mc.scenario = resolve_scenario(cfg);
    if (cfg.s_values) mc.s_real = *cfg.s_values;
    if (cfg.assumed_s) mc.assumed_s = *cfg.assumed_s;
    if (cfg.seeds) mc.seeds = *cfg.seeds;
    const auto res = mismatch_sweep(mc);
    std::vector<BenchmarkRecord> all = res.dem;
    all.insert(all.end(), res.kf.begin(), res.kf.end());
    std::ostringstream body;
    write_records_csv(body, all, true);
    emit(args.out_path, body.str(), "sweep-mismatch", cfg, {{"failed_cells", failed_cells(all)}});
    std::vector<std::string> names;
    for (double s : mc.assumed_s) names.push_back(fmt(s));
    names.push_back("KF");
    print_median_table(out, all, mc.s_real, names, [](const BenchmarkRecord& r, const std::string& c) {
        if (c == "KF") return r.method == "KF";
        return r.s_assumed && fmt(*r.s_assumed) == c;
    });
    return kExitOk;
}

int cmd_landscape(const CommonArgs& args, const std::string& data_path, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    const Scenario sc = resolve_scenario(cfg);
    const StudySettings settings = to_settings(cfg);
    json extra;
    Dataset data;
    if (!data_path.empty()) {
        data = load_dataset(data_path);
        extra["data"] = data_path;
    } else {
        data = simulate_scenario(sc, settings, require_s_real(cfg), cfg.seed);
        extra["dataset"] = meta_json(data.meta);
    }
    const auto grid = make_grid(cfg.s_grid_lo, cfg.s_grid_hi, cfg.s_grid_step);
    const auto curves = fe_landscape(sc.plant, data, make_observer_config(settings, sc.plant), grid, cfg.t_eval);
    std::ostringstream body;
    write_landscape_csv(body, curves);
    json peaks = json::array();
    out << "t_eval\targmax_s\tinterior_maxima\n";
    for (const auto& c : curves) {
        peaks.push_back({{"t_eval", c.t_eval}, {"argmax_s", c.argmax_s}, {"interior_maxima", c.interior_maxima}});
        out << fmt(c.t_eval) << '\t' << fmt(c.argmax_s) << '\t' << c.interior_maxima << '\n';
    }
    extra["curves"] = peaks;
    emit(args.out_path, body.str(), "landscape", cfg, extra);
    return kExitOk;
}

int cmd_quadrant(const CommonArgs& args, const std::string& samples_path, std::ostream& out) {
    const RunConfig cfg = resolve_config(args);
    const Scenario sc = resolve_scenario(cfg);
    const QuadrantResult res =
        quadrant_analysis(cfg.samples, cfg.seed, cfg.p, sc.plant.n(), sc.plant.m(), !samples_path.empty());
    std::ostringstream body;
    write_quadrant_csv(body, cfg.samples, res);
    emit(args.out_path, body.str(), "quadrant", cfg,
         {{"p", cfg.p}, {"n", sc.plant.n()}, {"m", sc.plant.m()}});
    if (!samples_path.empty()) {
        std::ostringstream log;
        write_quadrant_samples_csv(log, res);
        write_text_file(samples_path, log.str());
    }
    out << "quadrants I..IV: " << res.counts[0] << ' ' << res.counts[1] << ' ' << res.counts[2] << ' '
        << res.counts[3] << " (on axis " << res.on_axis << ")\n";
    return kExitOk;
}

} // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"dems_lab: joint state and noise smoothness estimation workbench"};
    app.name("dems_lab");
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kToolVersion);

    CommonArgs common;
    EstimateArgs est;
    std::string landscape_data;
    std::string quadrant_samples;

    auto* simulate = app.add_subcommand("simulate", "simulate a scenario and write a dataset CSV");
    add_common(simulate, common);
    auto* estimate = app.add_subcommand("estimate", "run one estimator on a dataset CSV");
    add_common(estimate, common);
    estimate->add_option("--method", est.method, "dems, dem, kf, sa or smikf")
        ->required()
        ->check(CLI::IsMember({"dems", "dem", "kf", "sa", "smikf"}));
    estimate->add_option("--data", est.data_path, "dataset CSV")->required();
    auto* benchmark = app.add_subcommand("benchmark", "compare DEMs, KF, SA and SMIKF over seeds");
    add_common(benchmark, common);
    auto* sweep_embedding = app.add_subcommand("sweep-embedding", "fixed-s DEM error against embedding order");
    add_common(sweep_embedding, common);
    auto* sweep_mismatch = app.add_subcommand("sweep-mismatch", "fixed-s DEM error against assumed smoothness");
    add_common(sweep_mismatch, common);
    auto* landscape = app.add_subcommand("landscape", "free energy against smoothness at given times");
    add_common(landscape, common);
    landscape->add_option("--data", landscape_data, "dataset CSV (default: simulate from config)");
    auto* quadrant = app.add_subcommand("quadrant", "sign analysis of the precision slopes");
    add_common(quadrant, common);
    quadrant->add_option("--samples-out", quadrant_samples, "optional CSV of every sample");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(common, out);
        if (estimate->parsed()) return cmd_estimate(common, est, out);
        if (benchmark->parsed()) return cmd_benchmark(common, out);
        if (sweep_embedding->parsed()) return cmd_sweep_embedding(common, out);
        if (sweep_mismatch->parsed()) return cmd_sweep_mismatch(common, out);
        if (landscape->parsed()) return cmd_landscape(common, landscape_data, out);
        if (quadrant->parsed()) return cmd_quadrant(common, quadrant_samples, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    err << app.help();
    return kExitValidation;
}

} // namespace dems
