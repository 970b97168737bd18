#ifndef RKCQ_REPORT_IO_HPP
#define RKCQ_REPORT_IO_HPP

#include "rkcq/convergence.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rkcq {

inline constexpr const char* tool_version = "0.1.0";

class ReportIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV body: header `k,error,eoc`, eoc blank on the first row.
inline std::string report_csv(const ConvergenceReport& r)
{
    std::string out = "k,error,eoc\n";
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
        out += format_real(r.levels[i].k);
        out += ',';
        out += format_real(r.levels[i].error);
        out += ',';
        if (i > 0 && i - 1 < r.eoc.size()) {
            out += format_real(r.eoc[i - 1]);
        }
        out += '\n';
    }
    return out;
}

struct CsvRow {
    double k = 0.0;
    double error = 0.0;
    std::optional<double> eoc;
};

inline std::vector<CsvRow> parse_report_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "k,error,eoc") {
        throw ReportIoError("report CSV: missing header 'k,error,eoc'");
    }
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ReportIoError("report CSV: malformed row '" + line + "'");
        }
        CsvRow row;
        try {
            row.k = std::stod(line.substr(0, c1));
            row.error = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
            const std::string e = line.substr(c2 + 1);
            if (!e.empty()) {
                row.eoc = std::stod(e);
            }
        } catch (const std::logic_error&) {
            throw ReportIoError("report CSV: malformed number in row '" + line + "'");
        }
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json report_json(const ConvergenceReport& r)
{
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["method"] = r.method;
    j["quantity"] = r.quantity;
    j["valid"] = r.valid;
    if (!r.valid) {
        j["invalid_reason"] = r.invalid_reason;
    }
    j["levels"] = nlohmann::json::array();
    for (const auto& l : r.levels) {
        j["levels"].push_back({{"k", l.k}, {"error", l.error}, {"excluded", l.excluded}});
    }
    j["eoc"] = r.eoc;
    if (const auto med = r.median_tail_eoc()) {
        j["median_tail_eoc"] = *med;
    } else {
        j["median_tail_eoc"] = nullptr;
    }
    j["errors_strictly_decreasing"] = r.errors_strictly_decreasing();
    j["metadata"] = r.metadata;
    return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Writes `contents` to a temporary sibling and renames it into place.
inline void write_atomically(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ReportIoError("cannot open '" + tmp.string() + "' for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw ReportIoError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ReportIoError("cannot move output into '" + path.string() + "'");
    }
}

struct RunManifest {
    std::string command_line;
    nlohmann::json configuration;
    std::string version = tool_version;
    std::string timestamp;
    std::vector<std::string> outputs;
    std::string results_hash;

    nlohmann::json to_json() const
    {
        return {{"command_line", command_line}, {"configuration", configuration},
                {"tool_version", version},      {"timestamp", timestamp},
                {"outputs", outputs},           {"results_hash", results_hash}};
    }
};

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv)
{
    std::filesystem::path p = csv;
    p.replace_extension(".json");
    if (p == csv) {
        p += ".json";
    }
    return p;
}

/// Writes the CSV and its JSON sidecar (report plus manifest). The results
/// hash covers the CSV and the resolved configuration, not the timestamp.
inline RunManifest emit_report(const ConvergenceReport& r, const std::filesystem::path& csv_path,
                               const std::string& command_line = {}, const nlohmann::json& configuration = {})
{
    const std::string csv = report_csv(r);
    const std::filesystem::path json_path = sidecar_path(csv_path);
    RunManifest m;
    m.command_line = command_line;
    m.configuration = configuration;
    m.timestamp = utc_timestamp();
    m.outputs = {csv_path.string(), json_path.string()};
    m.results_hash = hex64(fnv1a(csv + configuration.dump()));
    nlohmann::json j = report_json(r);
    j["manifest"] = m.to_json();
    write_atomically(csv_path, csv);
    write_atomically(json_path, j.dump(2) + "\n");
    return m;
}

} // namespace rkcq

#endif // RKCQ_REPORT_IO_HPP
