#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "imbopt.h"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

const char* kTinyConfig = R"json({
  "version": 1,
  "dataset": {"profile": {"kind": "binary", "rho": 4, "n_minor": 25},
              "dim": 3, "separation": 3.0},
  "model": {"hidden": [], "activation": "tanh"},
  "algorithm": "pcngd",
  "schedule": {"kind": "constant", "eta": 0.2},
  "epochs": 30,
  "eval_interval": 5,
  "recall_threshold": 0.7,
  "mid": {"window_fraction": 0.2, "drop_threshold": 0.3},
  "output_dir": "capi_out",
  "seeds": [1, 2]
})json";

}  // namespace

TEST_CASE("version and status strings") {
    CHECK(std::strlen(imbopt_version()) > 0);
    CHECK(std::string(imbopt_status_message(IMBOPT_OK)) == "ok");
    CHECK(std::strlen(imbopt_status_message(IMBOPT_ERR_CONFIG)) > 0);
}

TEST_CASE("config errors carry messages") {
    imbopt_experiment* e = nullptr;
    CHECK(imbopt_experiment_from_json("{not json", &e) == IMBOPT_ERR_CONFIG);
    CHECK(e == nullptr);
    CHECK(std::strlen(imbopt_last_error()) > 0);

    // incompatible algorithm/batch pairing names both fields
    std::string bad = kTinyConfig;
    bad.replace(bad.find("\"pcngd\""), 7, "\"gd\"");
    bad.replace(bad.find("\"epochs\""), 8, "\"batch\": {\"n_b\": 5}, \"epochs\"");
    CHECK(imbopt_experiment_from_json(bad.c_str(), &e) == IMBOPT_ERR_CONFIG);
    const std::string msg = imbopt_last_error();
    CHECK(msg.find("gd") != std::string::npos);
    CHECK(msg.find("batch.n_b") != std::string::npos);
}

TEST_CASE("experiment runs produce the documented artifacts") {
    std::filesystem::remove_all("capi_out");
    imbopt_experiment* e = nullptr;
    REQUIRE(imbopt_experiment_from_json(kTinyConfig, &e) == IMBOPT_OK);
    REQUIRE(e != nullptr);
    REQUIRE(imbopt_experiment_run(e, 2) == IMBOPT_OK);
    CHECK(imbopt_experiment_seed_count(e) == 2);

    uint64_t seed = 0;
    int diverged = -1, mid = -1;
    double recall = -1, tau = -1;
    REQUIRE(imbopt_experiment_seed_result(e, 0, &seed, &diverged, &recall, &tau, &mid) ==
            IMBOPT_OK);
    CHECK(seed == 1);
    CHECK(diverged == 0);
    CHECK(recall >= 0.0);
    imbopt_experiment_destroy(e);

    CHECK(std::filesystem::exists("capi_out/run_1.csv"));
    CHECK(std::filesystem::exists("capi_out/run_2.csv"));
    CHECK(std::filesystem::exists("capi_out/summary.csv"));
    CHECK(std::filesystem::exists("capi_out/aggregate.csv"));
    CHECK(std::filesystem::exists("capi_out/manifest.json"));

    // determinism across reruns: byte-identical artifacts
    const std::string run1 = slurp("capi_out/run_1.csv");
    const std::string summary = slurp("capi_out/summary.csv");
    imbopt_experiment* e2 = nullptr;
    REQUIRE(imbopt_experiment_from_json(kTinyConfig, &e2) == IMBOPT_OK);
    REQUIRE(imbopt_experiment_run(e2, 1) == IMBOPT_OK);
    imbopt_experiment_destroy(e2);
    CHECK(slurp("capi_out/run_1.csv") == run1);
    CHECK(slurp("capi_out/summary.csv") == summary);
    std::filesystem::remove_all("capi_out");
}

TEST_CASE("seed override parsing") {
    imbopt_experiment* e = nullptr;
    REQUIRE(imbopt_experiment_from_json(kTinyConfig, &e) == IMBOPT_OK);
    CHECK(imbopt_experiment_set_seeds(e, "5,6,7") == IMBOPT_OK);
    CHECK(imbopt_experiment_set_seeds(e, "a,b") == IMBOPT_ERR_CONFIG);
    CHECK(std::strlen(imbopt_experiment_error(e)) > 0);
    imbopt_experiment_destroy(e);
}

TEST_CASE("theory batteries through the C surface") {
    size_t violations = 99;
    CHECK(imbopt_theory_run("multiclass", "capi_theory.csv", 3, 1, &violations) == IMBOPT_OK);
    CHECK(violations == 0);
    CHECK(std::filesystem::exists("capi_theory.csv"));
    std::remove("capi_theory.csv");

    CHECK(imbopt_theory_run("not_a_battery", "x.csv", 3, 1, nullptr) == IMBOPT_ERR_CONFIG);
    const std::string msg = imbopt_last_error();
    CHECK(msg.find("tightness") != std::string::npos);  // lists valid names
    CHECK(std::string(imbopt_battery_names()).find("pcnsgd_ball") != std::string::npos);
}

TEST_CASE("dataset generation is byte-deterministic") {
    const char* spec =
        R"({"profile": {"kind": "geometric", "n_max": 100, "base": 0.6, "classes": 10},
            "dim": 4, "separation": 2.0})";
    REQUIRE(imbopt_gen_data(spec, 11, "capi_data.csv", "capi_data.json") == IMBOPT_OK);
    const std::string csv1 = slurp("capi_data.csv");
    const std::string manifest = slurp("capi_data.json");
    CHECK(manifest.find("\"counts\"") != std::string::npos);
    REQUIRE(imbopt_gen_data(spec, 11, "capi_data.csv", "capi_data.json") == IMBOPT_OK);
    CHECK(slurp("capi_data.csv") == csv1);
    std::remove("capi_data.csv");
    std::remove("capi_data_test.csv");
    std::remove("capi_data.json");

    CHECK(imbopt_gen_data("{}", 1, "x.csv", "x.json") == IMBOPT_ERR_CONFIG);
}
