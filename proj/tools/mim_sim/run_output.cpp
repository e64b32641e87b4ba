#include "run_output.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

#include "config.hpp"

#ifndef MIM_VERSION
#define MIM_VERSION "0.0.0"
#endif

namespace mim::cli {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Csv::Csv(const std::vector<std::string>& header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += '\n';
}

Csv& Csv::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::logic_error("CSV row width differs from the header");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) text_ += ',';
        text_ += format_number(values[i]);
    }
    text_ += '\n';
    return *this;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

namespace {

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read " + file.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw IoError("cannot write " + file.string());
}

}  // namespace

std::string sha256_file(const fs::path& file) { return sha256_hex(read_file(file)); }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunWriter::RunWriter(fs::path out_dir) : out_(std::move(out_dir)), started_(utc_timestamp()) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create output directory " + out_.string() + ": " + ec.message());
    staging_ = out_ / (".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_, ec);
    fs::create_directory(staging_, ec);
    if (ec) throw IoError("cannot create staging directory " + staging_.string() + ": " + ec.message());
}

RunWriter::~RunWriter() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
}

void RunWriter::add(const std::string& name, const std::string& content) {
    if (name.empty() || name.find('/') != std::string::npos || name == "manifest.json")
        throw std::logic_error("bad artifact name " + name);
    write_file(staging_ / name, content);
    names_.push_back(name);
}

void RunWriter::add_json(const std::string& name, const nlohmann::json& doc) { add(name, doc.dump(2) + "\n"); }

void RunWriter::add_input(const fs::path& file) {
    inputs_.push_back({{"file", file.string()}, {"sha256", sha256_file(file)}});
}

void RunWriter::commit(nlohmann::json run) {
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& name : names_) {
        const std::string bytes = read_file(staging_ / name);
        artifacts.push_back({{"file", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    nlohmann::json manifest = {{"toolkit", "mim-sim"},
                               {"version", MIM_VERSION},
                               {"run", std::move(run)},
                               {"inputs", inputs_},
                               {"started_utc", started_},
                               {"finished_utc", utc_timestamp()},
                               {"artifacts", artifacts}};
    write_file(staging_ / "manifest.json", manifest.dump(2) + "\n");
    std::error_code ec;
    for (const auto& name : names_) {
        fs::rename(staging_ / name, out_ / name, ec);
        if (ec) throw IoError("cannot move " + name + " into " + out_.string() + ": " + ec.message());
    }
    fs::rename(staging_ / "manifest.json", out_ / "manifest.json", ec);
    if (ec) throw IoError("cannot write manifest: " + ec.message());
    committed_ = true;
}

std::vector<std::string> verify_manifest(const fs::path& out_dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(out_dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest.json is malformed: " + std::string(e.what()));
    }
    std::vector<std::string> problems;
    for (const auto& a : manifest.at("artifacts")) {
        const fs::path file = out_dir / a.at("file").get<std::string>();
        if (!fs::exists(file)) {
            problems.push_back(file.string() + ": missing");
            continue;
        }
        const std::string got = sha256_file(file);
        if (got != a.at("sha256").get<std::string>()) problems.push_back(file.string() + ": digest mismatch");
    }
    return problems;
}

}  // namespace mim::cli
