#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pfdiff {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a content fingerprint, rendered as 16 hex digits.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

/// Full round-trip formatting of a double (%.17g).
std::string format_double(double v);

/// Deterministic CSV assembly: header once, one row per call, rendered with
/// round-trip precision and written through a single writer.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(const std::vector<double>& values);
    void add_row_raw(const std::vector<std::string>& cells);
    const std::string& str() const { return body_; }
    void write(const std::string& path) const;

private:
    size_t columns_;
    std::string body_;
};

/// Reproducibility record emitted next to every output file set.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::uint64_t nfe_batches = 0;
    std::uint64_t nfe_points = 0;
    double wall_clock_sec = 0.0;
    std::vector<std::pair<std::string, std::string>> input_hashes;   // (name, hash)
    std::vector<std::pair<std::string, std::string>> output_files;   // (path, hash)

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

}  // namespace pfdiff
