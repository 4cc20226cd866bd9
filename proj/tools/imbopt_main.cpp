// imbopt command-line runner. Talks to the shared library exclusively
// through the C API in imbopt.h.
#include <cinttypes>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "imbopt.h"

namespace {

int fail(imbopt_status st, const char* context) {
    std::fprintf(stderr, "error: %s: %s (%s)\n", context, imbopt_last_error(),
                 imbopt_status_message(st));
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"imbopt: per-class gradient dynamics under class imbalance"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress per-seed progress output");

    // run
    auto* run = app.add_subcommand("run", "run a configured experiment over its seeds");
    std::string config_path, out_dir, seeds;
    int threads = 0;
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--seeds", seeds, "comma-separated seed list override");
    run->add_option("--threads", threads, "worker pool size (default: IMBOPT_THREADS or cores)");

    // theory
    auto* theory = app.add_subcommand("theory", "run a theorem/check battery");
    std::string battery, battery_out = "theory_report.csv";
    std::uint64_t battery_seed = 1;
    bool quick = false;
    theory->add_option("--battery", battery, std::string("one of: ") + imbopt_battery_names())
        ->required();
    theory->add_option("--out", battery_out, "report CSV path");
    theory->add_option("--seed", battery_seed, "instance generation seed");
    theory->add_flag("--quick", quick, "reduced instance counts (smoke test)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic imbalanced dataset");
    std::string profile_kind = "binary";
    double rho = 7.0, base = 0.6, separation = 3.0;
    std::size_t n_minor = 100, n_major = 0, majority_classes = 1, classes = 2, n_max = 0, dim = 2;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "dataset.csv", gen_manifest;
    gen->add_option("--profile", profile_kind, "binary | step | geometric")->required();
    gen->add_option("--rho", rho, "binary: majority/minority ratio");
    gen->add_option("--n-minor", n_minor, "binary/step: minority class size");
    gen->add_option("--n-major", n_major, "step: majority class size");
    gen->add_option("--majority-classes", majority_classes, "step: number of majority classes");
    gen->add_option("--classes", classes, "step/geometric: class count");
    gen->add_option("--n-max", n_max, "geometric: largest class size");
    gen->add_option("--base", base, "geometric: decay base in (0,1)");
    gen->add_option("--dim", dim, "feature dimension");
    gen->add_option("--separation", separation, "distance between adjacent class means");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "output CSV path");
    gen->add_option("--manifest", gen_manifest, "manifest path (default: <out>.manifest.json)");

    // version
    auto* version = app.add_subcommand("version", "print the library version");

    CLI11_PARSE(app, argc, argv);

    if (version->parsed()) {
        std::printf("imbopt %s\n", imbopt_version());
        return 0;
    }

    if (run->parsed()) {
        imbopt_experiment* e = nullptr;
        imbopt_status st = imbopt_experiment_from_file(config_path.c_str(), &e);
        if (st != IMBOPT_OK) return fail(st, "loading config");
        if (!out_dir.empty() &&
            (st = imbopt_experiment_set_output_dir(e, out_dir.c_str())) != IMBOPT_OK) {
            imbopt_experiment_destroy(e);
            return fail(st, "setting output dir");
        }
        if (!seeds.empty() &&
            (st = imbopt_experiment_set_seeds(e, seeds.c_str())) != IMBOPT_OK) {
            imbopt_experiment_destroy(e);
            return fail(st, "setting seeds");
        }
        st = imbopt_experiment_run(e, threads);
        if (st != IMBOPT_OK) {
            std::fprintf(stderr, "error: run failed: %s\n", imbopt_experiment_error(e));
            imbopt_experiment_destroy(e);
            return 1;
        }
        if (!quiet) {
            const size_t n = imbopt_experiment_seed_count(e);
            for (size_t i = 0; i < n; ++i) {
                uint64_t seed = 0;
                int diverged = 0, mid = 0;
                double recall = 0, tau = 0;
                imbopt_experiment_seed_result(e, i, &seed, &diverged, &recall, &tau, &mid);
                if (diverged)
                    std::printf("seed %" PRIu64 ": diverged\n", seed);
                else
                    std::printf("seed %" PRIu64 ": recall=%.4f tau=%g mid=%d\n", seed, recall,
                                tau, mid);
            }
        }
        imbopt_experiment_destroy(e);
        return 0;
    }

    if (theory->parsed()) {
        size_t violations = 0;
        const imbopt_status st = imbopt_theory_run(battery.c_str(), battery_out.c_str(),
                                                   battery_seed, quick ? 1 : 0, &violations);
        if (st == IMBOPT_OK) {
            if (!quiet)
                std::printf("battery %s: 0 violations, report at %s\n", battery.c_str(),
                            battery_out.c_str());
            return 0;
        }
        if (st == IMBOPT_ERR_VIOLATION) {
            std::fprintf(stderr, "battery %s: %zu violation(s), report at %s\n", battery.c_str(),
                         violations, battery_out.c_str());
            return 2;
        }
        return fail(st, "running battery");
    }

    if (gen->parsed()) {
        char spec[512];
        if (profile_kind == "binary") {
            std::snprintf(spec, sizeof spec,
                          "{\"profile\":{\"kind\":\"binary\",\"rho\":%g,\"n_minor\":%zu},"
                          "\"dim\":%zu,\"separation\":%g}",
                          rho, n_minor, dim, separation);
        } else if (profile_kind == "step") {
            std::snprintf(spec, sizeof spec,
                          "{\"profile\":{\"kind\":\"step\",\"classes\":%zu,"
                          "\"majority_classes\":%zu,\"n_major\":%zu,\"n_minor\":%zu},"
                          "\"dim\":%zu,\"separation\":%g}",
                          classes, majority_classes, n_major, n_minor, dim, separation);
        } else if (profile_kind == "geometric") {
            std::snprintf(spec, sizeof spec,
                          "{\"profile\":{\"kind\":\"geometric\",\"n_max\":%zu,\"base\":%g,"
                          "\"classes\":%zu},\"dim\":%zu,\"separation\":%g}",
                          n_max, base, classes, dim, separation);
        } else {
            std::fprintf(stderr, "error: unknown profile '%s'\n", profile_kind.c_str());
            return 1;
        }
        if (gen_manifest.empty()) gen_manifest = gen_out + ".manifest.json";
        const imbopt_status st =
            imbopt_gen_data(spec, gen_seed, gen_out.c_str(), gen_manifest.c_str());
        if (st != IMBOPT_OK) return fail(st, "generating dataset");
        if (!quiet) std::printf("wrote %s and %s\n", gen_out.c_str(), gen_manifest.c_str());
        return 0;
    }

    return 0;
}
