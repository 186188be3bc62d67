#include "echoless/bench.hpp"

#include "echoless/channel.hpp"
#include "echoless/errors.hpp"
#include "echoless/metrics.hpp"
#include "echoless/modem.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace echoless {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0xD6E8FEB86659FD93ull));
}

std::optional<double> rounded(std::optional<double> v) {
    if (!v) return std::nullopt;
    return round4(*v);
}

std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct RirSource {
    std::string id;
    std::optional<AudioBuffer> rir;  ///< empty for corpus files that failed to load
    std::optional<double> rt60;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string csv_number(const std::optional<double>& v) {
    if (!v) return {};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

nlohmann::json config_echo(const BenchConfig& cfg) {
    nlohmann::json source;
    if (const auto* sweep = std::get_if<SweepSpec>(&cfg.rir_source)) {
        source = {{"kind", "sweep"},
                  {"start", sweep->start},
                  {"stop", sweep->stop},
                  {"count", sweep->count},
                  {"rirs_per_rt", sweep->rirs_per_rt}};
    } else {
        source = {{"kind", "corpus"}, {"directory", std::get<std::filesystem::path>(cfg.rir_source).string()}};
    }
    return {{"profile", cfg.profile},
            {"sample_rate", cfg.sample_rate},
            {"packets_per_rir", cfg.packets_per_rir},
            {"payload_bytes", cfg.payload_bytes},
            {"seed", cfg.seed},
            {"dereverb", to_string(cfg.dereverb)},
            {"snr_db", opt_json(cfg.snr_db)},
            {"lead_silence", cfg.lead_silence},
            {"rir_source", std::move(source)},
            {"dereverb_config",
             {{"late_delay", cfg.dereverb_config.late_delay},
              {"beta", cfg.dereverb_config.beta},
              {"lambda", cfg.dereverb_config.lambda},
              {"prior", cfg.dereverb_config.prior == PriorSnr::recursive ? "recursive" : "decision_directed"}}}};
}

PacketOutcome run_packet(const BenchConfig& cfg, const ProtocolProfile& profile, const RirSource& room,
                         std::uint64_t item_seed) {
    PacketOutcome out;
    std::mt19937_64 rng(item_seed);
    Packet pkt;
    pkt.payload.resize(cfg.payload_bytes);
    for (auto& b : pkt.payload) b = static_cast<std::uint8_t>(rng() & 0xFF);

    const auto tones = encode_packet(pkt, profile, cfg.sample_rate);
    const std::size_t symbol = profile.symbol_samples(cfg.sample_rate);
    const auto lead = static_cast<std::size_t>(std::llround(cfg.lead_silence * cfg.sample_rate)) + rng() % symbol;
    std::vector<double> clean_samples(lead, 0.0);
    clean_samples.insert(clean_samples.end(), tones.samples().begin(), tones.samples().end());
    clean_samples.resize(clean_samples.size() + lead, 0.0);
    const AudioBuffer clean(std::move(clean_samples), cfg.sample_rate);

    ChannelSpec chan;
    chan.rir = *room.rir;
    chan.snr_db = cfg.snr_db;
    chan.noise_seed = rng();
    const auto reverberant = apply_channel(clean, chan);

    // Clean reference zero-padded to the reverberant length so frames line up.
    std::vector<double> padded(clean.samples().begin(), clean.samples().end());
    padded.resize(reverberant.size(), 0.0);
    const StftConfig stft_cfg = cfg.dereverb_config.stft.value_or(StftConfig::for_rate(cfg.sample_rate));
    const auto clean_spec = stft(AudioBuffer(std::move(padded), cfg.sample_rate), stft_cfg);
    const auto rev_spec = stft(reverberant, stft_cfg);

    if (cfg.dereverb != DereverbMode::on) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = decode_packet(reverberant, profile);
        out.decode_seconds = seconds_since(t0);
        out.attempted_before = true;
        out.ok_before = res.ok() && res.payload == pkt.payload;
        out.lsd_before = lsd(clean_spec, rev_spec).mean_db;
    }
    if (cfg.dereverb != DereverbMode::off) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto dr = dereverberate(rev_spec, cfg.dereverb_config);
        out.dereverb_seconds = seconds_since(t0);
        if (!dr.fallback) out.estimated_rt60 = dr.rt60;
        const auto res = decode_packet(dr.output, profile);
        out.attempted_after = true;
        out.ok_after = res.ok() && res.payload == pkt.payload;
        const auto processed = stft(dr.output, stft_cfg);
        out.lsd_after = lsd(clean_spec, processed).mean_db;
        try {
            out.rr = rr(rev_spec, processed, &clean_spec).mean_db;
        } catch (const MetricUnavailable&) {
        }
    }
    return out;
}

} // namespace

SweepSpec SweepSpec::parse(const std::string& text) {
    SweepSpec s;
    std::stringstream ss(text);
    std::string a;
    std::string b;
    std::string c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) ) {
        throw InvalidArgument("sweep must be start:stop:count, got '" + text + "'");
    }
    try {
        std::size_t used = 0;
        s.start = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        s.stop = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        const long n = std::stol(c, &used);
        if (used != c.size() || n < 1) throw std::invalid_argument(c);
        s.count = static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
        throw InvalidArgument("sweep must be start:stop:count, got '" + text + "'");
    }
    if (!(s.start > 0.0) || s.stop < s.start) throw InvalidArgument("sweep needs 0 < start <= stop");
    return s;
}

std::vector<double> SweepSpec::values() const {
    std::vector<double> v;
    for (std::size_t i = 0; i < count; ++i) {
        v.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return v;
}

std::string to_string(DereverbMode m) {
    switch (m) {
    case DereverbMode::off: return "off";
    case DereverbMode::on: return "on";
    case DereverbMode::both: return "both";
    }
    return "both";
}

DereverbMode parse_dereverb_mode(const std::string& text) {
    if (text == "off") return DereverbMode::off;
    if (text == "on") return DereverbMode::on;
    if (text == "both") return DereverbMode::both;
    throw InvalidArgument("dereverb mode must be on, off or both");
}

void BenchConfig::validate() const {
    if (packets_per_rir < 1) throw InvalidArgument("packets_per_rir must be >= 1");
    if (payload_bytes < 1) throw InvalidArgument("payload_bytes must be >= 1");
    if (!(lead_silence >= 0.0)) throw InvalidArgument("lead_silence must be >= 0");
    const auto p = ProtocolProfile::by_name(profile);
    p.validate(sample_rate);
    if (payload_bytes > p.max_payload) throw InvalidArgument("payload_bytes exceeds the profile maximum");
    if (const auto* sweep = std::get_if<SweepSpec>(&rir_source)) {
        if (sweep->count < 1 || sweep->rirs_per_rt < 1 || !(sweep->start > 0.0) || sweep->stop < sweep->start) {
            throw InvalidArgument("invalid sweep");
        }
    }
    dereverb_config.validate();
}

double round4(double v) {
    const double r = std::round(v * 1e4) / 1e4;
    return r == 0.0 ? 0.0 : r;  // no negative zero in reports
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("ECHOLESS_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<std::size_t>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

BenchRow summarize_row(std::string rir_id, std::optional<double> true_rt60, const std::vector<PacketOutcome>& outcomes) {
    BenchRow row;
    row.rir_id = std::move(rir_id);
    row.true_rt60 = rounded(true_rt60);
    row.packets = outcomes.size();
    std::vector<double> est;
    std::vector<double> lsd_b;
    std::vector<double> lsd_a;
    std::vector<double> rrs;
    std::size_t before_n = 0;
    std::size_t before_ok = 0;
    std::size_t after_n = 0;
    std::size_t after_ok = 0;
    for (const auto& o : outcomes) {
        if (o.error) ++row.errors;
        if (o.attempted_before) {
            ++before_n;
            before_ok += o.ok_before ? 1 : 0;
        }
        if (o.attempted_after) {
            ++after_n;
            after_ok += o.ok_after ? 1 : 0;
        }
        if (o.estimated_rt60) est.push_back(*o.estimated_rt60);
        if (o.lsd_before) lsd_b.push_back(*o.lsd_before);
        if (o.lsd_after) lsd_a.push_back(*o.lsd_after);
        if (o.rr) rrs.push_back(*o.rr);
    }
    if (before_n) row.decode_rate_before = round4(100.0 * static_cast<double>(before_ok) / static_cast<double>(before_n));
    if (after_n) row.decode_rate_after = round4(100.0 * static_cast<double>(after_ok) / static_cast<double>(after_n));
    row.estimated_rt60 = rounded(mean_of(est));
    row.mean_lsd_before = rounded(mean_of(lsd_b));
    row.mean_lsd_after = rounded(mean_of(lsd_a));
    row.mean_rr = rounded(mean_of(rrs));
    return row;
}

BenchAggregate summarize(const std::vector<BenchRow>& rows, const std::vector<PacketOutcome>& all) {
    BenchAggregate agg;
    agg.rirs = rows.size();
    agg.packets = all.size();
    std::size_t bn = 0;
    std::size_t bok = 0;
    std::size_t an = 0;
    std::size_t aok = 0;
    for (const auto& o : all) {
        if (o.attempted_before) {
            ++bn;
            bok += o.ok_before ? 1 : 0;
        }
        if (o.attempted_after) {
            ++an;
            aok += o.ok_after ? 1 : 0;
        }
    }
    if (bn) agg.decode_rate_before = round4(100.0 * static_cast<double>(bok) / static_cast<double>(bn));
    if (an) agg.decode_rate_after = round4(100.0 * static_cast<double>(aok) / static_cast<double>(an));
    std::vector<double> lb;
    std::vector<double> la;
    std::vector<double> rrs;
    std::vector<double> err;
    for (const auto& r : rows) {
        if (r.mean_lsd_before) lb.push_back(*r.mean_lsd_before);
        if (r.mean_lsd_after) la.push_back(*r.mean_lsd_after);
        if (r.mean_rr) rrs.push_back(*r.mean_rr);
        if (r.true_rt60 && r.estimated_rt60) err.push_back(std::abs(*r.true_rt60 - *r.estimated_rt60));
    }
    agg.mean_lsd_before = rounded(mean_of(lb));
    agg.mean_lsd_after = rounded(mean_of(la));
    agg.mean_rr = rounded(mean_of(rrs));
    agg.rt60_mae = rounded(mean_of(err));
    return agg;
}

BenchRun run_benchmark(const BenchConfig& cfg) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const auto profile = ProtocolProfile::by_name(cfg.profile);

    BenchRun run;
    run.report.config = config_echo(cfg);

    std::vector<RirSource> rooms;
    if (const auto* sweep = std::get_if<SweepSpec>(&cfg.rir_source)) {
        const auto rts = sweep->values();
        for (std::size_t i = 0; i < rts.size(); ++i) {
            for (std::size_t s = 0; s < sweep->rirs_per_rt; ++s) {
                RirSpec spec;
                spec.rt60 = rts[i];
                spec.seed = mix(cfg.seed, 0x52495200ull + i, s);
                char id[64];
                std::snprintf(id, sizeof id, "rt%.2f_s%02zu", rts[i], s);
                rooms.push_back({id, synth_rir(spec, cfg.sample_rate), rts[i]});
            }
        }
    } else {
        auto corpus = load_rir_corpus(std::get<std::filesystem::path>(cfg.rir_source), cfg.sample_rate);
        run.report.warnings = std::move(corpus.warnings);
        for (auto& e : corpus.entries) rooms.push_back({std::move(e.name), std::move(e.rir), e.rt60});
        for (auto& name : corpus.rejected) rooms.push_back({std::move(name), std::nullopt, std::nullopt});
        std::sort(rooms.begin(), rooms.end(), [](const RirSource& a, const RirSource& b) { return a.id < b.id; });
    }

    const std::size_t per = cfg.packets_per_rir;
    const std::size_t items = rooms.size() * per;
    std::vector<PacketOutcome> outcomes(items);
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads ? cfg.threads : default_thread_count(),
                                                                   std::max<std::size_t>(items, 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items; i = next++) {
            const std::size_t r = i / per;
            const std::size_t p = i % per;
            try {
                if (!rooms[r].rir) throw FormatError("unusable RIR");
                outcomes[i] = run_packet(cfg, profile, rooms[r], mix(cfg.seed, r, p + 1));
            } catch (const std::exception&) {
                PacketOutcome failed;
                failed.error = true;
                failed.attempted_before = cfg.dereverb != DereverbMode::on;
                failed.attempted_after = cfg.dereverb != DereverbMode::off;
                outcomes[i] = failed;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (std::size_t r = 0; r < rooms.size(); ++r) {
        const std::vector<PacketOutcome> slice(outcomes.begin() + static_cast<std::ptrdiff_t>(r * per),
                                               outcomes.begin() + static_cast<std::ptrdiff_t>((r + 1) * per));
        run.report.rows.push_back(summarize_row(rooms[r].id, rooms[r].rt60, slice));
    }
    run.report.aggregate = summarize(run.report.rows, outcomes);

    run.timing.threads = threads;
    run.timing.work_items = items;
    run.timing.total_seconds = seconds_since(t_start);
    double dec = 0.0;
    double der = 0.0;
    for (const auto& o : outcomes) {
        dec += o.decode_seconds;
        der += o.dereverb_seconds;
    }
    if (items) {
        run.timing.mean_decode_seconds = dec / static_cast<double>(items);
        run.timing.mean_dereverb_seconds = der / static_cast<double>(items);
    }
    return run;
}

nlohmann::json report_to_json(const BenchReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"rir_id", r.rir_id},
                        {"true_rt60", opt_json(r.true_rt60)},
                        {"estimated_rt60", opt_json(r.estimated_rt60)},
                        {"decode_rate_before", opt_json(r.decode_rate_before)},
                        {"decode_rate_after", opt_json(r.decode_rate_after)},
                        {"mean_lsd_before", opt_json(r.mean_lsd_before)},
                        {"mean_lsd_after", opt_json(r.mean_lsd_after)},
                        {"mean_rr", opt_json(r.mean_rr)},
                        {"packets", r.packets},
                        {"errors", r.errors}});
    }
    const auto& a = report.aggregate;
    return {{"schema_version", report.schema_version},
            {"config", report.config},
            {"rows", std::move(rows)},
            {"aggregate",
             {{"decode_rate_before", opt_json(a.decode_rate_before)},
              {"decode_rate_after", opt_json(a.decode_rate_after)},
              {"mean_lsd_before", opt_json(a.mean_lsd_before)},
              {"mean_lsd_after", opt_json(a.mean_lsd_after)},
              {"mean_rr", opt_json(a.mean_rr)},
              {"rt60_mae", opt_json(a.rt60_mae)},
              {"rirs", a.rirs},
              {"packets", a.packets}}},
            {"warnings", report.warnings}};
}

BenchReport report_from_json(const nlohmann::json& j) {
    BenchReport report;
    try {
        report.schema_version = j.at("schema_version").get<int>();
        if (report.schema_version != BenchReport::kSchemaVersion) {
            throw FormatError("unsupported report schema version " + std::to_string(report.schema_version));
        }
        report.config = j.at("config");
        for (const auto& r : j.at("rows")) {
            BenchRow row;
            row.rir_id = r.at("rir_id").get<std::string>();
            row.true_rt60 = opt_from(r, "true_rt60");
            row.estimated_rt60 = opt_from(r, "estimated_rt60");
            row.decode_rate_before = opt_from(r, "decode_rate_before");
            row.decode_rate_after = opt_from(r, "decode_rate_after");
            row.mean_lsd_before = opt_from(r, "mean_lsd_before");
            row.mean_lsd_after = opt_from(r, "mean_lsd_after");
            row.mean_rr = opt_from(r, "mean_rr");
            row.packets = r.at("packets").get<std::size_t>();
            row.errors = r.at("errors").get<std::size_t>();
            report.rows.push_back(std::move(row));
        }
        const auto& a = j.at("aggregate");
        report.aggregate.decode_rate_before = opt_from(a, "decode_rate_before");
        report.aggregate.decode_rate_after = opt_from(a, "decode_rate_after");
        report.aggregate.mean_lsd_before = opt_from(a, "mean_lsd_before");
        report.aggregate.mean_lsd_after = opt_from(a, "mean_lsd_after");
        report.aggregate.mean_rr = opt_from(a, "mean_rr");
        report.aggregate.rt60_mae = opt_from(a, "rt60_mae");
        report.aggregate.rirs = a.at("rirs").get<std::size_t>();
        report.aggregate.packets = a.at("packets").get<std::size_t>();
        report.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
    return report;
}

std::string report_to_csv(const BenchReport& report) {
    std::string out =
        "rir_id,true_rt60,estimated_rt60,decode_rate_before,decode_rate_after,mean_lsd_before,mean_lsd_after,mean_rr,"
        "packets,errors\n";
    for (const auto& r : report.rows) {
        out += csv_field(r.rir_id) + ',' + csv_number(r.true_rt60) + ',' + csv_number(r.estimated_rt60) + ',' +
               csv_number(r.decode_rate_before) + ',' + csv_number(r.decode_rate_after) + ',' +
               csv_number(r.mean_lsd_before) + ',' + csv_number(r.mean_lsd_after) + ',' + csv_number(r.mean_rr) + ',' +
               std::to_string(r.packets) + ',' + std::to_string(r.errors) + '\n';
    }
    return out;
}

nlohmann::json timing_to_json(const BenchTiming& t) {
    return {{"threads", t.threads},
            {"work_items", t.work_items},
            {"total_seconds", t.total_seconds},
            {"mean_decode_seconds", t.mean_decode_seconds},
            {"mean_dereverb_seconds", t.mean_dereverb_seconds}};
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw FormatError("write failed: " + path.string());
}

} // namespace

std::vector<std::filesystem::path> write_report(const BenchReport& report, const std::filesystem::path& directory,
                                                std::vector<ReportFormat> formats) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw FormatError("cannot create " + directory.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (auto f : formats) {
        if (f == ReportFormat::json) {
            const auto p = directory / "report.json";
            write_text(p, report_to_json(report).dump(2) + "\n");
            written.push_back(p);
        } else {
            const auto p = directory / "report.csv";
            write_text(p, report_to_csv(report));
            written.push_back(p);
        }
    }
    return written;
}

BenchReport read_report(const std::filesystem::path& json_file) {
    std::ifstream in(json_file);
    if (!in) throw FormatError("cannot open " + json_file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(json_file.string() + ": " + e.what());
    }
    return report_from_json(j);
}

} // namespace echoless
