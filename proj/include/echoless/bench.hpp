#pragma once

#include "echoless/dereverb.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace echoless {

/// `count` RT60 values evenly spaced over [start, stop], `rirs_per_rt` seeded
/// synthetic rooms each.
struct SweepSpec {
    double start = 0.4;
    double stop = 2.0;
    std::size_t count = 5;
    std::size_t rirs_per_rt = 20;

    /// Parses "start:stop:count".
    static SweepSpec parse(const std::string& text);
    [[nodiscard]] std::vector<double> values() const;
};

enum class DereverbMode { off, on, both };

std::string to_string(DereverbMode m);
DereverbMode parse_dereverb_mode(const std::string& text);

struct BenchConfig {
    std::string profile = "audible";
    int sample_rate = 44100;
    std::size_t packets_per_rir = 20;
    std::size_t payload_bytes = 8;
    std::variant<SweepSpec, std::filesystem::path> rir_source = SweepSpec{};
    std::uint64_t seed = 7;
    DereverbMode dereverb = DereverbMode::both;
    std::optional<double> snr_db;
    double lead_silence = 0.2;  ///< seconds before the packet, plus up to one symbol of jitter
    std::size_t threads = 0;    ///< 0: ECHOLESS_THREADS, else hardware concurrency
    DereverbConfig dereverb_config;

    void validate() const;
};

struct BenchRow {
    std::string rir_id;
    std::optional<double> true_rt60;
    std::optional<double> estimated_rt60;
    std::optional<double> decode_rate_before;
    std::optional<double> decode_rate_after;
    std::optional<double> mean_lsd_before;
    std::optional<double> mean_lsd_after;
    std::optional<double> mean_rr;
    std::size_t packets = 0;
    std::size_t errors = 0;  ///< work items that threw; counted as decode failures

    friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchAggregate {
    std::optional<double> decode_rate_before;
    std::optional<double> decode_rate_after;
    std::optional<double> mean_lsd_before;
    std::optional<double> mean_lsd_after;
    std::optional<double> mean_rr;
    std::optional<double> rt60_mae;
    std::size_t rirs = 0;
    std::size_t packets = 0;

    friend bool operator==(const BenchAggregate&, const BenchAggregate&) = default;
};

/// Everything in the report is a deterministic function of the config;
/// numbers are rounded to 4 decimals.
struct BenchReport {
    static constexpr int kSchemaVersion = 1;

    int schema_version = kSchemaVersion;
    nlohmann::json config;
    std::vector<BenchRow> rows;
    BenchAggregate aggregate;
    std::vector<std::string> warnings;

    friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// Wall-clock figures, kept out of the report so reports stay reproducible.
struct BenchTiming {
    std::size_t threads = 1;
    std::size_t work_items = 0;
    double total_seconds = 0.0;
    double mean_decode_seconds = 0.0;
    double mean_dereverb_seconds = 0.0;
};

struct BenchRun {
    BenchReport report;
    BenchTiming timing;
};

/// For each RIR and packet: encode, apply the channel, decode, dereverberate,
/// decode again, score. Failures inside a work item are recorded, never fatal.
/// Throws FormatError if a corpus directory cannot be read.
BenchRun run_benchmark(const BenchConfig& cfg);

/// Builds a row from per-packet outcomes; exposed for testing the aggregation.
struct PacketOutcome {
    bool attempted_before = false;
    bool ok_before = false;
    bool attempted_after = false;
    bool ok_after = false;
    std::optional<double> lsd_before;
    std::optional<double> lsd_after;
    std::optional<double> rr;
    std::optional<double> estimated_rt60;
    bool error = false;
    double decode_seconds = 0.0;
    double dereverb_seconds = 0.0;
};

BenchRow summarize_row(std::string rir_id, std::optional<double> true_rt60,
                       const std::vector<PacketOutcome>& outcomes);
BenchAggregate summarize(const std::vector<BenchRow>& rows, const std::vector<PacketOutcome>& all);

/// Rounds to 4 decimals.
[[nodiscard]] double round4(double v);

nlohmann::json report_to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);
std::string report_to_csv(const BenchReport& report);
nlohmann::json timing_to_json(const BenchTiming& timing);

enum class ReportFormat { json, csv };

/// Writes report.json and/or report.csv into `directory` (created if needed)
/// and returns the paths written. Throws FormatError on IO failure.
std::vector<std::filesystem::path> write_report(const BenchReport& report, const std::filesystem::path& directory,
                                                std::vector<ReportFormat> formats = {ReportFormat::json,
                                                                                     ReportFormat::csv});
BenchReport read_report(const std::filesystem::path& json_file);

/// Threads from ECHOLESS_THREADS or the hardware; at least 1.
std::size_t default_thread_count();

} // namespace echoless
