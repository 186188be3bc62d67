// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "echoless/bench.hpp"
#include "echoless/channel.hpp"
#include "echoless/dereverb.hpp"
#include "echoless/modem.hpp"
#include "echoless/reed_solomon.hpp"
#include "echoless/rt_estimator.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace echoless;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> p(n);
    for (auto& b : p) b = static_cast<std::uint8_t>(rng() & 0xFF);
    return p;
}

AudioBuffer padded(const AudioBuffer& x, std::size_t lead, std::size_t tail) {
    std::vector<double> v(lead, 0.0);
    v.insert(v.end(), x.samples().begin(), x.samples().end());
    v.resize(v.size() + tail, 0.0);
    return {std::move(v), x.sample_rate()};
}

AudioBuffer room(const AudioBuffer& x, double rt60, std::uint64_t seed) {
    ChannelSpec chan;
    RirSpec spec;
    spec.rt60 = rt60;
    spec.seed = seed;
    chan.rir = spec;
    return apply_channel(x, chan);
}

// A reverberant packet with a random payload and onset.
AudioBuffer random_reverberant_packet(std::mt19937_64& rng, double rt60, std::size_t payload = 8, int rate = 44100) {
    const auto pkt = encode_packet(Packet{random_bytes(rng, payload)}, ProtocolProfile::audible(), rate);
    return room(padded(pkt, 4410 + rng() % 4410, 0), rt60, rng());
}

void criterion_modem() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    int decoded = 0;
    int total = 0;
    for (const auto& profile : {ProtocolProfile::audible(), ProtocolProfile::ultrasonic()}) {
        for (int rate : {44100, 48000}) {
            for (int i = 0; i < 50; ++i, ++total) {
                const auto payload = random_bytes(rng, 1 + rng() % 16);
                const auto audio = padded(encode_packet(Packet{payload}, profile, rate), rng() % 8000, 2000);
                const auto r = decode_packet(audio, profile);
                decoded += r.ok() && r.payload == payload ? 1 : 0;
            }
        }
    }

    const ReedSolomon rs(8);
    int rs_ok = 0;
    int rs_trials = 0;
    // every (errors, erasures) pair within the bound, spread over 1000 trials
    std::vector<std::pair<int, int>> combos;
    for (int e = 0; e <= 4; ++e) {
        for (int f = 0; 2 * e + f <= 8; ++f) combos.emplace_back(e, f);
    }
    for (int t = 0; t < 1000; ++t, ++rs_trials) {
        const auto [e, f] = combos[static_cast<std::size_t>(t) % combos.size()];
        std::vector<Symbol> data(23);
        for (auto& s : data) s = static_cast<Symbol>(rng() % 32);
        auto cw = rs.encode(data);
        std::vector<std::size_t> pos(31);
        std::iota(pos.begin(), pos.end(), 0);
        std::shuffle(pos.begin(), pos.end(), rng);
        for (int i = 0; i < e; ++i) cw[pos[static_cast<std::size_t>(i)]] ^= static_cast<Symbol>(1 + rng() % 31);
        const std::vector<std::size_t> erased(pos.begin() + e, pos.begin() + e + f);
        for (auto p : erased) cw[p] = static_cast<Symbol>(rng() % 32);
        const auto r = rs.decode(cw, erased);
        rs_ok += r.ok && r.data == data && r.corrected_errors == e ? 1 : 0;
    }
    const double secs = seconds_since(t0);
    report(1, "modem correctness",
           decoded == total && rs_ok == rs_trials && secs < 60.0,
           fmt("anechoic %d/%d decoded; RS n=31 parity=8 %d/%d trials over %zu (e,f) pairs; %.1f s", decoded, total,
               rs_ok, rs_trials, combos.size(), secs));
}

void criterion_rt60() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    double abs_err = 0.0;
    int n = 0;
    std::string per_rt;
    for (double rt : {0.4, 0.8, 1.2, 1.6, 2.0}) {
        double sum = 0.0;
        for (int seed = 0; seed < 20; ++seed, ++n) {
            const auto x = random_reverberant_packet(rng, rt);
            double est = 0.0;
            try {
                est = estimate_rt60(x, StftConfig::for_rate(x.sample_rate())).rt60;
            } catch (const std::exception&) {
                est = 0.0;  // a failed estimate counts with its full error
            }
            abs_err += std::abs(est - rt);
            sum += est;
        }
        per_rt += fmt(" %.1f->%.2f", rt, sum / 20.0);
    }
    const double mae = abs_err / n;
    const double secs = seconds_since(t0);
    report(2, "RT60 accuracy", mae <= 0.25 && secs < 300.0,
           fmt("MAE %.3f s over %d rooms (mean estimate per RT:%s); %.1f s", mae, n, per_rt.c_str(), secs));
}

struct SweepRun {
    BenchReport report;
    double seconds = 0.0;
};

SweepRun sweep_bench() {
    BenchConfig cfg;
    cfg.rir_source = SweepSpec{0.4, 2.0, 5, 20};
    cfg.packets_per_rir = 5;
    cfg.payload_bytes = 8;
    cfg.seed = 7;
    const auto t0 = Clock::now();
    SweepRun run{run_benchmark(cfg).report, 0.0};
    run.seconds = seconds_since(t0);
    return run;
}

void criterion_lsd(const SweepRun& run) {
    int better = 0;
    int total = 0;
    double before = 0.0;
    double after = 0.0;
    for (const auto& r : run.report.rows) {
        if (!r.mean_lsd_before || !r.mean_lsd_after) continue;
        ++total;
        better += *r.mean_lsd_after < *r.mean_lsd_before ? 1 : 0;
        before += *r.mean_lsd_before;
        after += *r.mean_lsd_after;
    }
    const std::size_t rirs = run.report.rows.size();
    report(3, "LSD improvement", total == 100 && rirs == 100 && better >= 90,
           fmt("%d/%d RIRs lower after dereverberation; mean LSD %.2f -> %.2f dB", better, total, before / total,
               after / total));
}

void criterion_rr(const SweepRun& run) {
    std::vector<double> rts;
    std::vector<double> rrs;
    std::map<double, std::pair<double, int>> by_rt;
    int positive = 0;
    for (const auto& r : run.report.rows) {
        if (!r.true_rt60 || !r.mean_rr) continue;
        rts.push_back(*r.true_rt60);
        rrs.push_back(*r.mean_rr);
        positive += *r.mean_rr > 0.0 ? 1 : 0;
        by_rt[*r.true_rt60].first += *r.mean_rr;
        by_rt[*r.true_rt60].second += 1;
    }
    bool groups_positive = !by_rt.empty();
    std::string groups;
    for (const auto& [rt, acc] : by_rt) {
        const double m = acc.first / acc.second;
        groups_positive = groups_positive && m > 0.0;
        groups += fmt(" %.1f:%.2f", rt, m);
    }
    const double rho = rts.size() > 2 ? oracle::spearman(rts, rrs) : 0.0;
    const bool all_rows = positive == static_cast<int>(rrs.size()) && rrs.size() == 100;
    report(4, "RR behaviour", groups_positive && all_rows && rho > 0.0,
           fmt("mean RR dB per RT:%s; %d/%zu rows > 0; Spearman(RR, RT60) = %.3f", groups.c_str(), positive,
               rrs.size(), rho));
}

void criterion_decode_gain(const SweepRun& run) {
    double before = 0.0;
    double after = 0.0;
    int rows = 0;
    for (const auto& r : run.report.rows) {
        if (!r.true_rt60 || *r.true_rt60 < 0.8 - 1e-9 || *r.true_rt60 > 2.0 + 1e-9) continue;
        before += r.decode_rate_before.value_or(0.0);
        after += r.decode_rate_after.value_or(0.0);
        ++rows;
    }
    before /= rows;
    after /= rows;
    const auto& agg = run.report.aggregate;
    report(5, "decode-rate gain", rows > 0 && after - before >= 10.0,
           fmt("RT 0.8-2.0 s (%d RIRs x 5 packets): %.2f%% -> %.2f%% (%+.2f points); all RT: %.2f%% -> %.2f%%; "
               "sweep %.0f s",
               rows, before, after, after - before, agg.decode_rate_before.value_or(0.0),
               agg.decode_rate_after.value_or(0.0), run.seconds));
}

// Runs `n` cases; a case returns an empty string on success.
std::pair<int, std::string> property(int n, const std::function<std::string(int)>& body) {
    int ok = 0;
    std::string first;
    for (int i = 0; i < n; ++i) {
        auto msg = body(i);
        if (msg.empty()) ++ok;
        else if (first.empty()) first = msg;
    }
    return {ok, first};
}

void criterion_properties() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(606);
    const int n = 100;
    std::vector<std::string> parts;
    bool all = true;
    auto tally = [&](const char* name, const std::pair<int, std::string>& r) {
        parts.push_back(fmt("%s %d/%d", name, r.first, n));
        if (r.first != n) {
            all = false;
            std::printf("  %s first failure: %s\n", name, r.second.c_str());
        }
    };

    tally("COLA", property(n, [&](int i) {
        const int rate = i % 2 ? 48000 : 44100;
        const auto cfg = StftConfig::for_rate(rate);
        const std::size_t len = cfg.window_length * 3 + rng() % 20000;
        const auto x = oracle::white_noise(len, rng(), 0.01 + 0.001 * static_cast<double>(rng() % 500));
        const auto y = istft(stft(AudioBuffer(x, rate), cfg)).vector();
        const double e = oracle::rel_rms(y, x, cfg.window_length, len - cfg.window_length);
        return e < 1e-6 ? std::string() : fmt("relative RMS %.3g", e);
    }));

    tally("gain bounds", property(n, [&](int) {
        DereverbConfig cfg;
        cfg.lambda = 0.01 + 0.98 * static_cast<double>(rng() % 1000) / 1000.0;
        cfg.beta = static_cast<double>(rng() % 1000) / 1000.0;
        cfg.prior = rng() % 2 ? PriorSnr::recursive : PriorSnr::decision_directed;
        RealGrid power(33, 120);
        std::uniform_real_distribution<double> db(-80.0, 20.0);
        for (auto& v : power.data) v = rng() % 10 == 0 ? 0.0 : std::pow(10.0, db(rng) / 10.0);
        const auto reverb = reverberant_psd(power, ReverbModel::from_rt60(0.1 + static_cast<double>(rng() % 40) / 10.0),
                                            cfg, 0.001 + static_cast<double>(rng() % 20) / 1000.0);
        for (double g : spectral_gain(power, reverb, cfg).gain.data) {
            if (!(g >= cfg.lambda && g <= 1.0)) return fmt("gain %.17g outside [%.3f, 1]", g, cfg.lambda);
        }
        return std::string();
    }));

    tally("scale equivariance", property(n, [&](int) {
        const auto x = random_reverberant_packet(rng, 0.3 + static_cast<double>(rng() % 18) / 10.0, 1 + rng() % 3);
        const double alpha = std::exp(static_cast<double>(rng() % 1000) / 100.0 - 5.0);
        const auto a = dereverberate(x);
        const auto b = dereverberate(scaled(x, alpha));
        double err = 0.0;
        double ref = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            err = std::max(err, std::abs(b.output[i] - alpha * a.output[i]));
            ref = std::max(ref, std::abs(alpha * a.output[i]));
        }
        return err <= 1e-9 * ref ? std::string() : fmt("relative deviation %.3g at alpha %.3g", err / ref, alpha);
    }));

    tally("amplitude invariance", property(n, [&](int) {
        const auto x = random_reverberant_packet(rng, 0.3 + static_cast<double>(rng() % 18) / 10.0, 1 + rng() % 3);
        const double alpha = std::exp(static_cast<double>(rng() % 1000) / 100.0 - 5.0);
        const auto cfg = StftConfig::for_rate(x.sample_rate());
        const double a = estimate_rt60(x, cfg).rt60;
        const double b = estimate_rt60(scaled(x, alpha), cfg).rt60;
        return std::abs(a - b) <= 1e-9 * a ? std::string() : fmt("%.12f vs %.12f at alpha %.3g", a, b, alpha);
    }));

    tally("magnitude contraction", property(n, [&](int) {
        const auto x = random_reverberant_packet(rng, 0.3 + static_cast<double>(rng() % 18) / 10.0, 1 + rng() % 3);
        const auto spec = stft(x, StftConfig::for_rate(x.sample_rate()));
        DereverbConfig cfg;
        cfg.lambda = 0.05 + static_cast<double>(rng() % 50) / 100.0;
        const auto res = dereverberate(spec, cfg);
        for (std::size_t i = 0; i < spec.data().size(); ++i) {
            const auto c = spec.data()[i] * res.gains.gain.data[i];
            if (std::abs(c) > std::abs(spec.data()[i])) return fmt("bin %zu grew", i);
        }
        return std::string();
    }));

    std::string detail;
    for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
    report(6, "property suites", all, detail + fmt("; %.1f s", seconds_since(t0)));
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    const auto t0 = Clock::now();
    BenchConfig cfg;
    cfg.rir_source = SweepSpec{0.4, 2.0, 5, 2};
    cfg.packets_per_rir = 2;
    cfg.seed = 7;
    const auto base = fs::temp_directory_path() / "echoless_acceptance";
    fs::remove_all(base);
    std::vector<std::string> bytes;
    for (std::size_t threads : {1u, 1u, 4u}) {
        cfg.threads = threads;
        const auto dir = base / ("run" + std::to_string(bytes.size()));
        write_report(run_benchmark(cfg).report, dir, {ReportFormat::json});
        bytes.push_back(file_bytes(dir / "report.json"));
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1] && bytes[1] == bytes[2];
    fs::remove_all(base);
    report(7, "determinism", same,
           fmt("report.json %zu bytes, identical across 2 runs at 1 thread and 1 run at 4 threads: %s; %.1f s",
               bytes[0].size(), same ? "yes" : "no", seconds_since(t0)));
}

} // namespace

int main() {
    criterion_modem();
    criterion_rt60();
    const auto sweep = sweep_bench();
    criterion_lsd(sweep);
    criterion_rr(sweep);
    criterion_decode_gain(sweep);
    criterion_properties();
    criterion_determinism();
    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
