#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imbopt/theory.hpp"

namespace imbopt::battery {

struct BatteryOptions {
    std::size_t instances = 100;  // tightness uses 50
    std::vector<std::size_t> horizons = {100, 1000, 10000};
    std::size_t pcnsgd_seeds = 20;
    std::size_t clt_draws = 10000;
    std::size_t rpcngd_draws = 2000;

    static BatteryOptions quick();  // reduced sizes for unit tests
};

struct BatteryResult {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t checks = 0;
    std::size_t violations = 0;            // satisfied == false with hypotheses_ok == true
    std::size_t regenerated_instances = 0; // draws discarded by hypothesis filtering

    void write_csv(const std::string& path) const;
};

const std::vector<std::string>& battery_names();
bool is_battery_name(const std::string& name);

/// Runs one named battery (gd, pcngd_v1, pcngd_v2, rpcngd, pl_decreasing,
/// pl_constant, pcnsgd_ball, multiclass, tightness, clt) with instance
/// randomness derived from `seed`.
BatteryResult run_battery(const std::string& name, std::uint64_t seed,
                          const BatteryOptions& opt = {});

}  // namespace imbopt::battery
