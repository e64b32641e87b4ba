#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mim::cli {

Params::Params(json table, std::string subcommand) : table_(std::move(table)), subcommand_(std::move(subcommand)) {
    if (!table_.is_object()) throw ConfigError("configuration must be a JSON object");
}

const json* Params::lookup(const std::string& key) {
    used_.insert(key);
    const auto it = table_.find(key);
    return it == table_.end() ? nullptr : &*it;
}

double Params::as_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("key '" + key + "': expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("key '" + key + "': value is not finite");
    return x;
}

double Params::number(const std::string& key) {
    const auto v = optional_number(key);
    if (!v) throw ConfigError("missing required key '" + key + "' for " + subcommand_);
    return *v;
}

double Params::number(const std::string& key, double fallback) {
    const double v = optional_number(key).value_or(fallback);
    resolved_[key] = v;
    return v;
}

std::optional<double> Params::optional_number(const std::string& key) {
    const json* v = lookup(key);
    if (v == nullptr) return std::nullopt;
    const double x = as_number(*v, key);
    resolved_[key] = x;
    return x;
}

std::optional<std::vector<double>> Params::optional_numbers(const std::string& key) {
    const json* v = lookup(key);
    if (v == nullptr) return std::nullopt;
    std::vector<double> out;
    if (v->is_array()) {
        for (const auto& e : *v) out.push_back(as_number(e, key));
        if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    } else {
        out.push_back(as_number(*v, key));
    }
    resolved_[key] = out;
    return out;
}

std::vector<double> Params::numbers(const std::string& key, const std::vector<double>& fallback) {
    auto v = optional_numbers(key);
    if (v) return *v;
    resolved_[key] = fallback;
    return fallback;
}

std::size_t Params::count(const std::string& key, std::size_t fallback) {
    const json* v = lookup(key);
    std::size_t n = fallback;
    if (v != nullptr) {
        if (!v->is_number_integer() || v->get<long long>() < 1)
            throw ConfigError("key '" + key + "': expected a positive integer");
        n = v->get<std::size_t>();
    }
    resolved_[key] = n;
    return n;
}

std::optional<std::string> Params::optional_text(const std::string& key) {
    const json* v = lookup(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) throw ConfigError("key '" + key + "': expected a string");
    resolved_[key] = v->get<std::string>();
    return v->get<std::string>();
}

void Params::finish() const {
    std::string unknown;
    for (const auto& [key, value] : table_.items())
        if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty()) throw ConfigError("unknown key(s) for " + subcommand_ + ": " + unknown);
}

Params load_params(const std::string& subcommand, const std::optional<std::filesystem::path>& config_file,
                   const std::optional<std::string>& preset) {
    json table = preset ? preset_table(subcommand, *preset) : json::object();
    if (config_file) {
        std::ifstream in(*config_file);
        if (!in) throw IoError("cannot read config file " + config_file->string());
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(config_file->string() + ": " + e.what());
        }
        if (!file.is_object()) throw ConfigError(config_file->string() + ": top level must be an object");
        for (const auto& [key, value] : file.items()) table[key] = value;
    }
    return Params(std::move(table), subcommand);
}

}  // namespace mim::cli
