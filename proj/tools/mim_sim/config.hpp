#ifndef MIM_SIM_CONFIG_HPP
#define MIM_SIM_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mim/errors.hpp"

namespace mim::cli {

using nlohmann::json;

// Exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Exit code 4.
class IoError : public Error {
public:
    using Error::Error;
};

// Flat key/value table for one subcommand. Keys carry their unit as a suffix
// (_m, _hz, _k, ...) or are dimensionless ratios. Every key read is recorded
// with its final value; keys never read are rejected by finish().
class Params {
public:
    Params(json table, std::string subcommand);

    double number(const std::string& key);
    double number(const std::string& key, double fallback);
    std::optional<double> optional_number(const std::string& key);
    // Accepts a scalar or an array of numbers.
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
    std::optional<std::vector<double>> optional_numbers(const std::string& key);
    std::size_t count(const std::string& key, std::size_t fallback);
    std::optional<std::string> optional_text(const std::string& key);

    bool has(const std::string& key) const { return table_.contains(key); }
    void finish() const;

    const json& resolved() const { return resolved_; }
    const std::string& subcommand() const { return subcommand_; }

private:
    const json* lookup(const std::string& key);
    static double as_number(const json& v, const std::string& key);

    json table_;
    json resolved_ = json::object();
    std::set<std::string> used_;
    std::string subcommand_;
};

// Preset values first, then the config file on top.
Params load_params(const std::string& subcommand, const std::optional<std::filesystem::path>& config_file,
                   const std::optional<std::string>& preset);

// Parameter table of a named preset for a subcommand; ConfigError if unknown.
json preset_table(const std::string& subcommand, const std::string& name);
std::vector<std::string> preset_names(const std::string& subcommand);

}  // namespace mim::cli

#endif
