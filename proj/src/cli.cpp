#include "echoless/cli.hpp"

#include "echoless/bench.hpp"
#include "echoless/channel.hpp"
#include "echoless/dereverb.hpp"
#include "echoless/errors.hpp"
#include "echoless/modem.hpp"
#include "echoless/rt_estimator.hpp"
#include "echoless/wav.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace echoless {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> parse_hex(const std::string& text) {
    std::string s = text;
    if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s = s.substr(2);
    if (s.empty() || s.size() % 2 != 0) throw UsageError("payload must be an even number of hex digits");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 2) {
        unsigned v = 0;
        for (std::size_t j = i; j < i + 2; ++j) {
            const char c = s[j];
            v <<= 4;
            if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
            else throw UsageError(std::string("invalid hex digit '") + c + "'");
        }
        out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 0xF];
    }
    return s;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << text;
}

SampleFormat parse_format(const std::string& s) {
    return s == "pcm16" ? SampleFormat::pcm16 : SampleFormat::float32;
}

AudioBuffer load(const std::string& path, std::ostream& err) {
    auto wav = read_wav(path);
    for (const auto& w : wav.warnings) err << "warning: " << w << "\n";
    return std::move(wav.audio);
}

void save(const std::string& path, const AudioBuffer& buf, const std::string& format, std::ostream& err) {
    const auto stats = write_wav(path, buf, parse_format(format));
    if (stats.clipped) err << "warning: " << stats.clipped << " samples clipped\n";
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

} // namespace

int cli_dispatch(int argc, char** argv) {
    return cli_dispatch(argc, argv, std::cout, std::cerr);
}

int cli_dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Acoustic FSK modem with blind dereverberation"};
    app.name("echoless");
    app.require_subcommand(1);
    const std::vector<std::string> profiles{"audible", "ultrasonic"};
    const std::vector<std::string> formats{"float32", "pcm16"};

    // encode
    auto* enc = app.add_subcommand("encode", "Encode a payload as an FSK packet WAV");
    std::string payload_hex;
    std::string payload_file;
    std::string profile = "audible";
    int rate = 44100;
    std::string output;
    std::string format = "float32";
    auto* hex_opt = enc->add_option("--payload", payload_hex, "Payload as hex digits");
    auto* file_opt = enc->add_option("--payload-file", payload_file, "Payload read from a file")->check(CLI::ExistingFile);
    hex_opt->excludes(file_opt);
    enc->add_option("--profile", profile, "Tone profile")->check(CLI::IsMember(profiles))->capture_default_str();
    enc->add_option("--rate", rate, "Sample rate in Hz")->check(CLI::PositiveNumber)->capture_default_str();
    enc->add_option("-o,--output", output, "Output WAV")->required();
    enc->add_option("--format", format, "Sample format")->check(CLI::IsMember(formats))->capture_default_str();

    // decode
    auto* dec = app.add_subcommand("decode", "Decode an FSK packet from a WAV");
    std::string input;
    bool verbose = false;
    dec->add_option("input", input, "Input WAV")->required()->check(CLI::ExistingFile);
    dec->add_option("--profile", profile, "Tone profile")->check(CLI::IsMember(profiles))->capture_default_str();
    dec->add_flag("-v,--verbose", verbose, "Report FEC statistics on stderr");

    // rt60
    auto* rt = app.add_subcommand("rt60", "Blind RT60 estimate of a reverberant recording");
    std::string csv;
    rt->add_option("input", input, "Input WAV")->required()->check(CLI::ExistingFile);
    rt->add_option("--csv", csv, "Write per-band fits (k,freq_hz,rt60_k,r2)");

    // dereverb
    auto* der = app.add_subcommand("dereverb", "Suppress late reverberation");
    std::optional<double> rt60_override;
    std::string gain_csv;
    DereverbConfig dcfg;
    der->add_option("input", input, "Input WAV")->required()->check(CLI::ExistingFile);
    der->add_option("-o,--output", output, "Output WAV")->required();
    der->add_option("--rt60", rt60_override, "Use this RT60 in seconds instead of estimating")
        ->check(CLI::PositiveNumber);
    der->add_option("--gain-csv", gain_csv, "Write the gain grid (frame,time_s,bin,freq_hz,gain)");
    der->add_option("--beta", dcfg.beta, "A-priori SNR smoothing")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    der->add_option("--lambda", dcfg.lambda, "Gain floor")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    der->add_option("--format", format, "Sample format")->check(CLI::IsMember(formats))->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Pass a WAV through a synthetic or recorded room");
    RirSpec rir_spec;
    std::string rir_file;
    std::string rir_out;
    std::optional<double> snr;
    double peak = 0.9;
    std::uint64_t seed = 7;
    sim->add_option("input", input, "Input WAV")->required()->check(CLI::ExistingFile);
    sim->add_option("-o,--output", output, "Output WAV")->required();
    auto* rt_opt = sim->add_option("--rt60", rir_spec.rt60, "Synthetic room RT60 in seconds")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
    sim->add_option("--rir", rir_file, "Recorded RIR WAV instead of a synthetic room")
        ->check(CLI::ExistingFile)
        ->excludes(rt_opt);
    sim->add_option("--drr", rir_spec.drr_db_at_1s, "Direct-to-reverberant ratio in dB at RT60 = 1 s")
        ->capture_default_str();
    sim->add_option("--snr", snr, "Add white noise at this SNR in dB");
    sim->add_option("--normalize", peak, "Rescale to this peak magnitude (0 keeps the raw level)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sim->add_option("--seed", seed, "Seed for the room and the noise")->capture_default_str();
    sim->add_option("--rir-out", rir_out, "Also write the RIR used");
    sim->add_option("--format", format, "Sample format")->check(CLI::IsMember(formats))->capture_default_str();

    // bench
    auto* ben = app.add_subcommand("bench", "Decode-rate benchmark over simulated rooms");
    BenchConfig bcfg;
    std::string sweep_text;
    std::string corpus;
    std::string out_dir = "bench_out";
    std::string mode = "both";
    std::vector<std::string> report_formats{"json", "csv"};
    std::size_t rirs_per_rt = SweepSpec{}.rirs_per_rt;
    auto* sweep_opt = ben->add_option("--sweep", sweep_text, "Synthetic RT60 sweep start:stop:count (default 0.4:2.0:5)");
    ben->add_option("--corpus", corpus, "Directory of RIR WAVs with optional labels.csv")->excludes(sweep_opt);
    ben->add_option("--rirs-per-rt", rirs_per_rt, "Seeded rooms per sweep point")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    ben->add_option("--packets", bcfg.packets_per_rir, "Packets per RIR")->check(CLI::PositiveNumber)->capture_default_str();
    ben->add_option("--payload-bytes", bcfg.payload_bytes, "Payload length")->check(CLI::Range(1, 16))->capture_default_str();
    ben->add_option("--seed", bcfg.seed, "Seed")->capture_default_str();
    ben->add_option("--profile", bcfg.profile, "Tone profile")->check(CLI::IsMember(profiles))->capture_default_str();
    ben->add_option("--rate", bcfg.sample_rate, "Sample rate in Hz")->check(CLI::PositiveNumber)->capture_default_str();
    ben->add_option("--snr", bcfg.snr_db, "Add white noise at this SNR in dB");
    ben->add_option("--dereverb", mode, "on, off or both")
        ->check(CLI::IsMember({"on", "off", "both"}))
        ->capture_default_str();
    ben->add_option("--threads", bcfg.threads, "Worker threads (default: ECHOLESS_THREADS or all cores)");
    ben->add_option("-o,--output", out_dir, "Report directory")->capture_default_str();
    ben->add_option("--format", report_formats, "Report formats")
        ->check(CLI::IsMember({"json", "csv"}))
        ->delimiter(',')
        ->capture_default_str();
    bool with_timing = true;
    ben->add_flag("!--no-timing", with_timing, "Skip timing.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*enc) {
            std::vector<std::uint8_t> bytes;
            if (!payload_hex.empty()) bytes = parse_hex(payload_hex);
            else if (!payload_file.empty()) bytes = read_bytes(payload_file);
            else throw UsageError("one of --payload or --payload-file is required");
            const auto p = ProtocolProfile::by_name(profile);
            if (bytes.empty() || bytes.size() > p.max_payload) {
                throw UsageError("payload must be 1.." + std::to_string(p.max_payload) + " bytes");
            }
            save(output, encode_packet(Packet{bytes}, p, rate), format, err);
        } else if (*dec) {
            const auto audio = load(input, err);
            const auto res = decode_packet(audio, ProtocolProfile::by_name(profile));
            if (!res.ok()) {
                err << "decode failed: " << to_string(res.status) << "\n";
                return 1;
            }
            out << to_hex(res.payload) << "\n";
            if (verbose) {
                err << "offset " << res.preamble_offset << " corrected " << res.corrected_errors << " erasures "
                    << res.erasures_used << "\n";
            }
        } else if (*rt) {
            const auto audio = load(input, err);
            const auto est = estimate_rt60(audio, StftConfig::for_rate(audio.sample_rate()));
            out << fixed(est.rt60, 2) << "\n";
            if (!csv.empty()) {
                std::string text = "k,freq_hz,rt60_k,r2\n";
                for (const auto& b : est.per_band) {
                    text += std::to_string(b.band) + ',' + fixed(b.frequency_hz, 2) + ',' + fixed(b.rt60, 4) + ',' +
                            fixed(b.r2, 4) + '\n';
                }
                write_file(csv, text);
            }
        } else if (*der) {
            const auto audio = load(input, err);
            const auto res = dereverberate(audio, dcfg, rt60_override);
            if (res.fallback) {
                err << "warning: RT60 estimation failed, using " << fixed(kFallbackRt60, 2) << " s\n";
            }
            save(output, res.output, format, err);
            out << "rt60 " << fixed(res.rt60, 2) << (res.rt60_estimated ? " (estimated)" : "") << "\n";
            if (!gain_csv.empty()) {
                const auto& g = res.gains.gain;
                const auto scfg = dcfg.stft.value_or(StftConfig::for_rate(audio.sample_rate()));
                std::string text = "frame,time_s,bin,freq_hz,gain\n";
                for (std::size_t l = 0; l < g.frames; ++l) {
                    const double t = static_cast<double>(l * scfg.hop) / audio.sample_rate();
                    for (std::size_t k = 0; k < g.bins; ++k) {
                        const double f = static_cast<double>(k) * audio.sample_rate() / static_cast<double>(scfg.window_length);
                        text += std::to_string(l) + ',' + fixed(t, 5) + ',' + std::to_string(k) + ',' + fixed(f, 2) +
                                ',' + fixed(g.at(k, l), 5) + '\n';
                    }
                }
                write_file(gain_csv, text);
            }
        } else if (*sim) {
            const auto audio = load(input, err);
            ChannelSpec chan;
            if (!rir_file.empty()) {
                auto rir = load(rir_file, err);
                if (rir.sample_rate() != audio.sample_rate()) throw FormatError("RIR and input sample rates differ");
                chan.rir = std::move(rir);
            } else {
                rir_spec.seed = seed;
                chan.rir = synth_rir(rir_spec, audio.sample_rate());
            }
            chan.snr_db = snr;
            if (peak > 0.0) chan.normalize_peak = peak;
            chan.noise_seed = seed ^ 0x5A5A5A5Aull;
            save(output, apply_channel(audio, chan), format, err);
            if (!rir_out.empty()) save(rir_out, std::get<AudioBuffer>(chan.rir), "float32", err);
        } else if (*ben) {
            if (!corpus.empty()) {
                bcfg.rir_source = std::filesystem::path(corpus);
            } else {
                SweepSpec sweep;
                try {
                    if (!sweep_text.empty()) sweep = SweepSpec::parse(sweep_text);
                } catch (const InvalidArgument& e) {
                    throw UsageError(e.what());
                }
                sweep.rirs_per_rt = rirs_per_rt;
                bcfg.rir_source = sweep;
            }
            bcfg.dereverb = parse_dereverb_mode(mode);
            try {
                bcfg.validate();
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            const auto run = run_benchmark(bcfg);
            std::vector<ReportFormat> fmts;
            for (const auto& f : report_formats) fmts.push_back(f == "csv" ? ReportFormat::csv : ReportFormat::json);
            for (const auto& p : write_report(run.report, out_dir, fmts)) out << "wrote " << p.string() << "\n";
            if (with_timing) {
                const auto p = std::filesystem::path(out_dir) / "timing.json";
                write_file(p.string(), timing_to_json(run.timing).dump(2) + "\n");
            }
            for (const auto& w : run.report.warnings) err << "warning: " << w << "\n";
            const auto& a = run.report.aggregate;
            if (a.decode_rate_before) out << "decode rate before " << fixed(*a.decode_rate_before, 2) << "%\n";
            if (a.decode_rate_after) out << "decode rate after  " << fixed(*a.decode_rate_after, 2) << "%\n";
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace echoless
