#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kinprice/fokker_planck.hpp"
#include "kinprice/model.hpp"
#include "kinprice/monte_carlo.hpp"

namespace kinprice {

/// Everything one experiment directory needs. Serialized as flat `key = value`
/// lines; see `config_keys()` for the key list.
struct ExperimentConfig {
    std::string name = "experiment";
    std::string output_dir = "runs";
    ModelParams model{};
    McConfig mc{};
    InitialCondition init{};
    FpCoupledConfig fp{};
    SteadyOptions steady{};
    std::int64_t tail_k = 0;  // 0 selects floor(n^{2/3})

    /// Re-validates every module invariant; throws ParameterError naming the key.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigKey {
    std::string_view key;
    std::string_view description;
};

/// Documented keys in serialization order.
const std::vector<ConfigKey>& config_keys();

/// Parses `key = value` text. Blank lines and `#` comments are ignored; unknown
/// or repeated keys and malformed values throw ParameterError. Missing keys keep
/// their defaults. The result is validated.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key, in `config_keys()` order, floats with 17 significant digits.
std::string format_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace kinprice
