#include "echoless/channel.hpp"

#include "echoless/convolve.hpp"
#include "echoless/dereverb.hpp"
#include "echoless/errors.hpp"
#include "echoless/wav.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace echoless {

void RirSpec::validate() const {
    if (!(rt60 > 0.0) || !std::isfinite(rt60)) throw InvalidArgument("RirSpec: rt60 must be positive");
    const double len = length_seconds();
    if (!(len >= rt60 / 2.0) || !std::isfinite(len)) {
        throw InvalidArgument("RirSpec: length must be at least rt60 / 2");
    }
    if (!std::isfinite(direct_gain) || !std::isfinite(drr_db_at_1s)) {
        throw InvalidArgument("RirSpec: non-finite gain");
    }
}

AudioBuffer synth_rir(const RirSpec& spec, int sample_rate) {
    spec.validate();
    if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
    const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(spec.length_seconds() * sample_rate)));
    const double delta = decay_constant(spec.rt60);
    const double per_sample = std::exp(-delta / sample_rate);

    // Expected tail energy sigma^2 * sum e^{-2 delta n / fs} is pinned to the target.
    double envelope_energy = 0.0;
    double env = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        env *= per_sample;
        envelope_energy += env * env;
    }
    const double target = spec.direct_gain * spec.direct_gain * std::pow(10.0, -spec.drr_db_at_1s / 10.0) * spec.rt60;
    const double sigma = envelope_energy > 0.0 ? std::sqrt(target / envelope_energy) : 0.0;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> h(n, 0.0);
    h[0] = spec.direct_gain;
    env = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        env *= per_sample;
        h[i] = sigma * env * gauss(rng);
    }
    return AudioBuffer(std::move(h), sample_rate);
}

AudioBuffer apply_channel(const AudioBuffer& signal, const ChannelSpec& chan) {
    if (chan.snr_db && !std::isfinite(*chan.snr_db)) throw InvalidArgument("snr_db must be finite");
    if (chan.normalize_peak && !(*chan.normalize_peak > 0.0)) throw InvalidArgument("normalize_peak must be positive");

    const AudioBuffer ir = std::holds_alternative<AudioBuffer>(chan.rir)
                               ? std::get<AudioBuffer>(chan.rir)
                               : synth_rir(std::get<RirSpec>(chan.rir), signal.sample_rate());
    std::vector<double> y = convolve(signal, ir).release();

    if (chan.snr_db) {
        const double signal_power = energy(y) / static_cast<double>(y.size());
        std::mt19937_64 rng(chan.noise_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> noise(y.size());
        for (double& v : noise) v = gauss(rng);
        const double noise_power = energy(noise) / static_cast<double>(noise.size());
        const double wanted = signal_power / std::pow(10.0, *chan.snr_db / 10.0);
        const double gain = noise_power > 0.0 ? std::sqrt(wanted / noise_power) : 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += gain * noise[i];
    }
    if (chan.normalize_peak) {
        const double peak = peak_abs(y);
        if (peak > 0.0) {
            const double g = *chan.normalize_peak / peak;
            for (double& v : y) v *= g;
        }
    }
    return AudioBuffer(std::move(y), signal.sample_rate());
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::map<std::string, double> read_labels(const std::filesystem::path& file, std::vector<std::string>& warnings) {
    std::map<std::string, double> labels;
    std::ifstream in(file);
    if (!in) {
        warnings.push_back("cannot read " + file.string());
        return labels;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            warnings.push_back(file.filename().string() + ":" + std::to_string(line_no) + ": expected file,rt60");
            continue;
        }
        const std::string name = trim(line.substr(0, comma));
        const std::string value = trim(line.substr(comma + 1));
        if (line_no == 1 && lower(name) == "file") continue;
        try {
            std::size_t used = 0;
            const double rt = std::stod(value, &used);
            if (used != value.size() || !(rt > 0.0)) throw std::invalid_argument(value);
            labels[name] = rt;
        } catch (const std::exception&) {
            warnings.push_back(file.filename().string() + ":" + std::to_string(line_no) + ": bad rt60 '" + value + "'");
        }
    }
    return labels;
}

} // namespace

RirCorpus load_rir_corpus(const std::filesystem::path& directory, std::optional<int> expected_rate) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw FormatError("RIR corpus directory not readable: " + directory.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory, ec)) {
        if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".wav") files.push_back(entry.path());
    }
    if (ec) throw FormatError("cannot list " + directory.string() + ": " + ec.message());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    RirCorpus corpus;
    std::map<std::string, double> labels;
    const auto label_file = directory / "labels.csv";
    if (fs::exists(label_file, ec)) labels = read_labels(label_file, corpus.warnings);

    for (const auto& path : files) {
        const std::string name = path.filename().string();
        try {
            auto wav = read_wav(path);
            for (const auto& w : wav.warnings) corpus.warnings.push_back(name + ": " + w);
            if (expected_rate && wav.audio.sample_rate() != *expected_rate) {
                corpus.warnings.push_back(name + ": sample rate " + std::to_string(wav.audio.sample_rate()) +
                                          " Hz does not match " + std::to_string(*expected_rate) + " Hz, skipped");
                corpus.rejected.push_back(name);
                continue;
            }
            if (wav.audio.empty()) {
                corpus.warnings.push_back(name + ": empty, skipped");
                corpus.rejected.push_back(name);
                continue;
            }
            std::optional<double> rt;
            if (auto it = labels.find(name); it != labels.end()) rt = it->second;
            corpus.entries.push_back({name, std::move(wav.audio), rt});
        } catch (const std::exception& e) {
            corpus.warnings.push_back(name + ": " + e.what());
            corpus.rejected.push_back(name);
        }
    }
    return corpus;
}

} // namespace echoless
