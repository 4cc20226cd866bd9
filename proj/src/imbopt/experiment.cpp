#include "imbopt/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "imbopt/csv.hpp"
#include "json.hpp"

namespace imbopt::exp {

namespace {

using nlohmann::json;

const json& require(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing field '" + where + key + "'");
    return *it;
}

data::ImbalanceProfile parse_profile(const json& j) {
    data::ImbalanceProfile p;
    const std::string kind = require(j, "kind", "dataset.profile.").get<std::string>();
    if (kind == "binary") {
        p.kind = data::ImbalanceProfile::Kind::BinaryRatio;
        p.rho = require(j, "rho", "dataset.profile.").get<double>();
        p.n_minor = require(j, "n_minor", "dataset.profile.").get<std::size_t>();
    } else if (kind == "step") {
        p.kind = data::ImbalanceProfile::Kind::Step;
        p.classes = require(j, "classes", "dataset.profile.").get<std::size_t>();
        p.majority_classes = require(j, "majority_classes", "dataset.profile.").get<std::size_t>();
        p.n_major = require(j, "n_major", "dataset.profile.").get<std::size_t>();
        p.n_minor = require(j, "n_minor", "dataset.profile.").get<std::size_t>();
    } else if (kind == "geometric") {
        p.kind = data::ImbalanceProfile::Kind::Geometric;
        p.n_max = require(j, "n_max", "dataset.profile.").get<std::size_t>();
        p.base = require(j, "base", "dataset.profile.").get<double>();
        p.classes = require(j, "classes", "dataset.profile.").get<std::size_t>();
    } else {
        throw ConfigError("dataset.profile.kind must be binary|step|geometric, got '" + kind +
                          "'");
    }
    return p;
}

json profile_to_json(const data::ImbalanceProfile& p) {
    json j;
    switch (p.kind) {
        case data::ImbalanceProfile::Kind::BinaryRatio:
            j = {{"kind", "binary"}, {"rho", p.rho}, {"n_minor", p.n_minor}};
            break;
        case data::ImbalanceProfile::Kind::Step:
            j = {{"kind", "step"},
                 {"classes", p.classes},
                 {"majority_classes", p.majority_classes},
                 {"n_major", p.n_major},
                 {"n_minor", p.n_minor}};
            break;
        case data::ImbalanceProfile::Kind::Geometric:
            j = {{"kind", "geometric"}, {"n_max", p.n_max}, {"base", p.base},
                 {"classes", p.classes}};
            break;
    }
    return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (j.value("version", 0) != 1)
        throw ConfigError("config field 'version' must be 1");

    ExperimentConfig cfg;
    try {
        const json& ds = require(j, "dataset", "");
        cfg.profile = parse_profile(require(ds, "profile", "dataset."));
        cfg.dim = require(ds, "dim", "dataset.").get<std::size_t>();
        cfg.separation = require(ds, "separation", "dataset.").get<double>();
        cfg.data_seed = ds.value("seed", std::uint64_t{0});

        const json& m = require(j, "model", "");
        cfg.model.input_dim = cfg.dim;
        cfg.model.classes = cfg.profile.class_count();
        cfg.model.hidden = m.value("hidden", std::vector<std::size_t>{});
        cfg.model.activation =
            model::activation_from_string(m.value("activation", std::string("tanh")));
        cfg.model.init_scale = m.value("init_scale", 0.0);

        cfg.train.algorithm =
            optim::algorithm_from_string(require(j, "algorithm", "").get<std::string>());
        const json& sc = require(j, "schedule", "");
        const std::string sched_kind = require(sc, "kind", "schedule.").get<std::string>();
        if (sched_kind == "constant") {
            cfg.train.schedule =
                optim::Schedule::constant(require(sc, "eta", "schedule.").get<double>());
        } else if (sched_kind == "inv_sqrt_t") {
            cfg.train.schedule = optim::Schedule::inv_sqrt_t(
                require(sc, "c", "schedule.").get<double>(), sc.value("horizon", 0.0));
        } else if (sched_kind == "angle_adaptive") {
            cfg.train.schedule = optim::Schedule::angle_adaptive(
                require(sc, "c", "schedule.").get<double>(), sc.value("horizon", 0.0));
        } else if (sched_kind == "pl_decreasing") {
            cfg.train.schedule =
                optim::Schedule::pl_decreasing(require(sc, "c_mu", "schedule.").get<double>());
        } else {
            throw ConfigError(
                "schedule.kind must be constant|inv_sqrt_t|angle_adaptive|pl_decreasing");
        }

        if (j.contains("batch")) {
            const json& b = j["batch"];
            cfg.train.n_batches = b.value("n_b", std::size_t{0});
            cfg.train.per_class_size = b.value("per_class_size", std::size_t{0});
        }
        cfg.train.epochs = require(j, "epochs", "").get<std::size_t>();
        cfg.train.eval_interval = j.value("eval_interval", std::size_t{1});
        cfg.train.recall_threshold = j.value("recall_threshold", 0.7);
        if (j.contains("mid")) {
            cfg.train.mid_window_fraction = j["mid"].value("window_fraction", 0.2);
            cfg.train.mid_drop_threshold = j["mid"].value("drop_threshold", 0.05);
        }
        cfg.train.fbg_refresh_interval = j.value("fbg_refresh_interval", std::size_t{5});
        cfg.train.p_min = j.value("p_min", 0.05);

        cfg.output_dir = j.value("output_dir", std::string("."));
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

void ExperimentConfig::validate() const {
    (void)profile.counts();  // validates profile parameters
    if (dim == 0) throw ConfigError("dataset.dim must be >= 1");
    if (separation < 0) throw ConfigError("dataset.separation must be >= 0");
    model.validate();
    train.validate();
    if (seeds.empty()) throw ConfigError("seeds must contain at least one entry");
}

optim::TrainResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::uint64_t dseed = cfg.data_seed != 0 ? cfg.data_seed : seed;
    const data::MixtureData mix =
        data::make_gaussian_mixture(cfg.profile, cfg.dim, cfg.separation, dseed);
    return optim::run_training(cfg.model, mix, cfg.train, seed);
}

namespace {

std::size_t minority_class_of(const std::vector<std::size_t>& counts) {
    std::size_t m = 0;
    for (std::size_t l = 1; l < counts.size(); ++l)
        if (counts[l] < counts[m]) m = l;
    return m;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                     const std::string& out_dir) {
    SeedOutcome oc;
    oc.seed = seed;
    const optim::TrainResult res = run_single(cfg, seed);
    const diag::RunLog& log = res.log;
    oc.diverged = log.diverged;
    oc.divergence_step = log.divergence_step;

    oc.runlog_path = out_dir + "/run_" + std::to_string(seed) + ".csv";
    std::ofstream os(oc.runlog_path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + oc.runlog_path);
    log.write_csv(os);

    if (!log.rows.empty()) {
        oc.final_macro_test_recall = log.rows.back().macro_recall_test();
        double peak = -1;
        for (const auto& r : log.rows) peak = std::max(peak, r.macro_recall_test());
        oc.peak_macro_test_recall = peak;
        const std::size_t minority = minority_class_of(cfg.profile.counts());
        const auto window = static_cast<std::size_t>(
            std::ceil(cfg.train.mid_window_fraction * static_cast<double>(log.rows.size())));
        oc.mid = diag::detect_mid(log, minority, std::max<std::size_t>(window, 1),
                                  cfg.train.mid_drop_threshold, cfg.train.recall_threshold);
    }
    return oc;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1) /
                     static_cast<double>(v.size()));
}

}  // namespace

Aggregate aggregate_outcomes(const std::vector<SeedOutcome>& outcomes) {
    Aggregate agg;
    std::vector<double> recalls, taus;
    for (const auto& oc : outcomes) {
        if (oc.diverged) {
            ++agg.seeds_diverged;
            continue;
        }
        ++agg.seeds_ok;
        recalls.push_back(oc.final_macro_test_recall);
        if (std::isfinite(oc.mid.tau)) {
            taus.push_back(oc.mid.tau);
            ++agg.seeds_tau_reached;
        }
    }
    if (!recalls.empty()) {
        agg.recall_mean = mean_of(recalls);
        agg.recall_stderr = stderr_of(recalls, agg.recall_mean);
    }
    if (!taus.empty()) {
        agg.tau_mean = mean_of(taus);
        agg.tau_stderr = stderr_of(taus, agg.tau_mean);
    }
    return agg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    if (threads <= 0) {
        if (const char* env = std::getenv("IMBOPT_THREADS")) threads = std::atoi(env);
        if (threads <= 0)
            threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), cfg.seeds.size());

    ExperimentResult result;
    result.outcomes.resize(cfg.seeds.size());
    std::vector<std::string> errors(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfg.seeds.size()) return;
            try {
                result.outcomes[i] = run_seed(cfg, cfg.seeds[i], cfg.output_dir);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw StateError("seed " + std::to_string(cfg.seeds[i]) + " failed: " + errors[i]);

    result.aggregate = aggregate_outcomes(result.outcomes);

    result.summary_path = cfg.output_dir + "/summary.csv";
    {
        std::ofstream os(result.summary_path, std::ios::binary);
        csv::Writer w(os);
        w.row({"seed", "algorithm", "diverged", "divergence_step", "final_macro_test_recall",
               "peak_macro_test_recall", "tau", "tau_err", "mid_present", "mid_depth",
               "mid_duration"});
        for (const auto& oc : result.outcomes) {
            w.field(static_cast<std::uint64_t>(oc.seed));
            w.field(to_string(cfg.train.algorithm));
            w.field(static_cast<std::int64_t>(oc.diverged ? 1 : 0));
            w.field(static_cast<std::uint64_t>(oc.divergence_step));
            w.field(oc.final_macro_test_recall);
            w.field(oc.peak_macro_test_recall);
            w.field(oc.mid.tau);
            w.field(oc.mid.tau_uncertainty);
            w.field(static_cast<std::int64_t>(oc.mid.mid_present ? 1 : 0));
            w.field(oc.mid.mid_depth);
            w.field(static_cast<std::uint64_t>(oc.mid.mid_duration));
            w.end_row();
        }
    }

    result.aggregate_path = cfg.output_dir + "/aggregate.csv";
    {
        std::ofstream os(result.aggregate_path, std::ios::binary);
        csv::Writer w(os);
        w.row({"algorithm", "recall_mean", "recall_stderr", "tau_mean", "tau_stderr", "seeds_ok",
               "seeds_diverged", "seeds_tau_reached"});
        const Aggregate& a = result.aggregate;
        w.field(to_string(cfg.train.algorithm));
        w.field(a.recall_mean);
        w.field(a.recall_stderr);
        w.field(a.tau_mean);
        w.field(a.tau_stderr);
        w.field(static_cast<std::uint64_t>(a.seeds_ok));
        w.field(static_cast<std::uint64_t>(a.seeds_diverged));
        w.field(static_cast<std::uint64_t>(a.seeds_tau_reached));
        w.end_row();
    }

    result.manifest_path = cfg.output_dir + "/manifest.json";
    {
        json manifest;
        manifest["version"] = 1;
        manifest["algorithm"] = to_string(cfg.train.algorithm);
        manifest["profile"] = profile_to_json(cfg.profile);
        manifest["dim"] = cfg.dim;
        manifest["separation"] = cfg.separation;
        manifest["data_seed"] = cfg.data_seed;
        json runs = json::array();
        for (const auto& oc : result.outcomes) {
            const std::uint64_t dseed = cfg.data_seed != 0 ? cfg.data_seed : oc.seed;
            runs.push_back({{"seed", oc.seed},
                            {"runlog", fs::path(oc.runlog_path).filename().string()},
                            {"streams",
                             {{"init", static_cast<std::uint64_t>(Stream::Init)},
                              {"data", static_cast<std::uint64_t>(Stream::Data)},
                              {"test_data", static_cast<std::uint64_t>(Stream::TestData)},
                              {"batching", static_cast<std::uint64_t>(Stream::Batching)},
                              {"data_seed", dseed}}}});
        }
        manifest["runs"] = runs;
        std::ofstream os(result.manifest_path, std::ios::binary);
        os << manifest.dump(2) << '\n';
    }
    return result;
}

void generate_dataset(const data::ImbalanceProfile& profile, std::size_t dim, double separation,
                      std::uint64_t seed, const std::string& csv_path,
                      const std::string& manifest_path) {
    const data::MixtureData mix = data::make_gaussian_mixture(profile, dim, separation, seed);
    data::export_csv(mix.train, csv_path);
    std::string test_path = csv_path;
    const auto pos = test_path.rfind(".csv");
    if (pos != std::string::npos)
        test_path.insert(pos, "_test");
    else
        test_path += "_test";
    data::export_csv(mix.test, test_path);

    json manifest;
    manifest["version"] = 1;
    manifest["profile"] = profile_to_json(profile);
    manifest["dim"] = dim;
    manifest["separation"] = separation;
    manifest["seed"] = seed;
    manifest["counts"] = mix.train.counts;
    manifest["fractions"] = mix.train.fractions;
    manifest["test_counts"] = mix.test.counts;
    manifest["train_csv"] = std::filesystem::path(csv_path).filename().string();
    manifest["test_csv"] = std::filesystem::path(test_path).filename().string();
    std::ofstream os(manifest_path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + manifest_path);
    os << manifest.dump(2) << '\n';
}

}  // namespace imbopt::exp
