#include "pfdiff/runio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pfdiff {

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const std::string& path) { return content_hash(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

void CsvWriter::add_row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::invalid_argument("csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) body_ += ',';
        body_ += format_double(values[i]);
    }
    body_ += '\n';
}

void CsvWriter::add_row_raw(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::invalid_argument("csv row width mismatch");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) body_ += ',';
        body_ += cells[i];
    }
    body_ += '\n';
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, body_); }

nlohmann::json RunManifest::to_json() const {
    nlohmann::json doc;
    doc["tool_version"] = kToolVersion;
    doc["subcommand"] = subcommand;
    doc["config"] = config;
    doc["seed"] = seed;
    doc["nfe"] = {{"batches", nfe_batches}, {"points", nfe_points}};
    doc["wall_clock_sec"] = wall_clock_sec;
    doc["input_hashes"] = nlohmann::json::object();
    for (const auto& [name, hash] : input_hashes) doc["input_hashes"][name] = hash;
    doc["outputs"] = nlohmann::json::array();
    for (const auto& [path, hash] : output_files) {
        doc["outputs"].push_back({{"path", path}, {"hash", hash}});
    }
    return doc;
}

void RunManifest::write(const std::string& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
}

}  // namespace pfdiff
