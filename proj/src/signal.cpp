#include "topobayes/signal.hpp"

#include "topobayes/errors.hpp"
#include "topobayes/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

namespace topobayes {

namespace {

void check_samples(const std::vector<double>& samples, double rate) {
    if (samples.size() < 2) {
        throw ValidationError("too few samples: need at least 2, got " +
                              std::to_string(samples.size()));
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw ValidationError("sample rate must be positive and finite");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw ValidationError("non-finite sample at index " + std::to_string(i));
        }
    }
}

std::string trim(const std::string& s) {
    auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return first < last ? std::string(first, last) : std::string();
}

std::optional<double> parse_number(const std::string& token) {
    if (token.empty()) {
        return std::nullopt;
    }
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
        return std::nullopt;
    }
    return v;
}

} // namespace

Signal::Signal(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    check_samples(samples_, sample_rate_);
}

double Signal::power() const {
    double acc = 0.0;
    for (double x : samples_) {
        acc += x * x;
    }
    return acc / static_cast<double>(samples_.size());
}

BandSpec BandSpec::named(const std::string& name) {
    if (name == "alpha") {
        return alpha();
    }
    if (name == "beta") {
        return beta();
    }
    throw ValidationError("unknown band '" + name + "' (expected alpha or beta)");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Signal generate_band_signal(const BandSpec& band, double duration, double sample_rate,
                            std::uint64_t seed) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw ValidationError("sample rate must be positive and finite");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw ValidationError("duration must be positive and finite");
    }
    if (band.n_components < 1) {
        throw ValidationError("band needs at least one component");
    }
    const double nyquist = sample_rate / 2.0;
    if (!(band.f_low > 0.0) || !(band.f_low < band.f_high)) {
        throw ValidationError("invalid band: require 0 < f_low < f_high");
    }
    if (!(band.f_high < nyquist)) {
        std::ostringstream msg;
        msg << "invalid band: f_high " << band.f_high << " Hz is not below the Nyquist frequency "
            << nyquist << " Hz";
        throw ValidationError(msg.str());
    }
    const auto n = static_cast<std::size_t>(std::floor(duration * sample_rate + 1e-9));
    if (n < 2) {
        throw ValidationError("duration * sample_rate must be at least 2 samples");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(band.f_low, band.f_high);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> amp(0.5, 1.5);

    std::vector<double> out(n, 0.0);
    for (int c = 0; c < band.n_components; ++c) {
        const double f = freq(rng);
        const double ph = phase(rng);
        const double a = amp(rng);
        const double w = 2.0 * std::numbers::pi * f / sample_rate;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += a * std::sin(w * static_cast<double>(i) + ph);
        }
    }

    double power = 0.0;
    for (double x : out) {
        power += x * x;
    }
    power /= static_cast<double>(n);
    if (!(power > 0.0)) {
        throw ValidationError("generated signal has zero power");
    }
    const double scale = 1.0 / std::sqrt(power);
    for (double& x : out) {
        x *= scale;
    }
    return Signal(std::move(out), sample_rate);
}

std::vector<double> white_noise(std::size_t n, double variance, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(variance));
    std::vector<double> out(n);
    for (double& x : out) {
        x = gauss(rng);
    }
    return out;
}

Signal add_noise(const Signal& signal, double snr_db, std::uint64_t seed) {
    if (!std::isfinite(snr_db)) {
        throw ValidationError("snr must be finite");
    }
    const double variance = signal.power() / std::pow(10.0, snr_db / 10.0);
    std::vector<double> out(signal.samples().begin(), signal.samples().end());
    const auto noise = white_noise(out.size(), variance, seed);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += noise[i];
    }
    return Signal(std::move(out), signal.sample_rate());
}

Signal parse_signal_csv(const std::string& text, double rate) {
    std::vector<double> samples;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string token = trim(line);
        if (token.empty()) {
            continue;
        }
        auto v = parse_number(token);
        if (!v) {
            if (!seen_content) {
                seen_content = true; // header line
                continue;
            }
            throw ValidationError("malformed CSV: line " + std::to_string(line_no) + " ('" + token +
                                  "') is not a number");
        }
        seen_content = true;
        if (!std::isfinite(*v)) {
            throw ValidationError("non-finite sample at line " + std::to_string(line_no));
        }
        samples.push_back(*v);
    }
    if (samples.size() < 2) {
        throw ValidationError("too few samples: need at least 2, got " + std::to_string(samples.size()));
    }
    return Signal(std::move(samples), rate);
}

Signal parse_signal_json(const std::string& text, std::optional<double> rate) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed signal JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("samples") || !doc["samples"].is_array()) {
        throw ValidationError("malformed signal JSON: expected {\"rate\": r, \"samples\": [...]}");
    }
    double r = 0.0;
    if (rate) {
        r = *rate;
    } else if (doc.contains("rate") && doc["rate"].is_number()) {
        r = doc["rate"].get<double>();
    } else {
        throw ValidationError("malformed signal JSON: missing numeric \"rate\"");
    }
    std::vector<double> samples;
    samples.reserve(doc["samples"].size());
    for (const auto& v : doc["samples"]) {
        if (v.is_null()) {
            throw ValidationError("non-finite sample (null) in signal JSON");
        }
        if (!v.is_number()) {
            throw ValidationError("malformed signal JSON: non-numeric sample");
        }
        samples.push_back(v.get<double>());
    }
    return Signal(std::move(samples), r);
}

Signal load_signal(const std::filesystem::path& path, SignalFormat format, std::optional<double> rate) {
    if (format == SignalFormat::Auto) {
        format = path.extension() == ".json" ? SignalFormat::Json : SignalFormat::Csv;
    }
    const std::string text = io::read_text(path);
    try {
        if (format == SignalFormat::Json) {
            return parse_signal_json(text, rate);
        }
        if (!rate) {
            throw ValidationError("CSV signals need an explicit sample rate");
        }
        return parse_signal_csv(text, *rate);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_signal_csv(const Signal& signal, const std::filesystem::path& path) {
    std::string text;
    text.reserve(signal.size() * 22);
    for (double x : signal.samples()) {
        text += io::format_double(x);
        text += '\n';
    }
    io::write_text(path, text);
}

} // namespace topobayes
