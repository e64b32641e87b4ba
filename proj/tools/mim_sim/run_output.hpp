#ifndef MIM_SIM_RUN_OUTPUT_HPP
#define MIM_SIM_RUN_OUTPUT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mim::cli {

// Shortest decimal that round-trips the double; '.' radix regardless of locale.
std::string format_number(double v);

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header);
    Csv& row(const std::vector<double>& values);
    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::size_t columns_;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);
std::string utc_timestamp();

// Collects a run's artifacts in a staging directory under the output
// directory and moves them into place only on commit(). A run that throws
// before commit() leaves no artifact behind.
class RunWriter {
public:
    explicit RunWriter(std::filesystem::path out_dir);
    ~RunWriter();
    RunWriter(const RunWriter&) = delete;
    RunWriter& operator=(const RunWriter&) = delete;

    void add(const std::string& name, const std::string& content);
    void add_json(const std::string& name, const nlohmann::json& doc);
    void add_input(const std::filesystem::path& file);

    // Writes manifest.json last. `run` holds subcommand, preset, seed and the
    // resolved configuration.
    void commit(nlohmann::json run);

private:
    std::filesystem::path out_;
    std::filesystem::path staging_;
    std::vector<std::string> names_;
    nlohmann::json inputs_ = nlohmann::json::array();
    std::string started_;
    bool committed_ = false;
};

// Recomputes every digest listed in out_dir/manifest.json. Returns the list of
// problems; empty means verified.
std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir);

}  // namespace mim::cli

#endif
