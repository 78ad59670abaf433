#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topobayes {

/// Uniformly sampled real-valued time series. Always holds at least two
/// finite samples and a positive sample rate.
class Signal {
public:
    Signal(std::vector<double> samples, double sample_rate);

    std::span<const double> samples() const { return samples_; }
    double sample_rate() const { return sample_rate_; }
    std::size_t size() const { return samples_.size(); }
    double duration() const { return static_cast<double>(samples_.size()) / sample_rate_; }

    /// Mean of squared samples.
    double power() const;

    friend bool operator==(const Signal&, const Signal&) = default;

private:
    std::vector<double> samples_;
    double sample_rate_;
};

struct BandSpec {
    double f_low = 0.0;
    double f_high = 0.0;
    int n_components = 3;

    static BandSpec alpha() { return {8.0, 13.0, 3}; }
    static BandSpec beta() { return {13.0, 30.0, 3}; }
    /// "alpha" or "beta"; throws ValidationError otherwise.
    static BandSpec named(const std::string& name);
};

/// Random sum of `band.n_components` sinusoids with frequencies uniform in
/// [f_low, f_high], phases uniform in [0, 2pi) and amplitudes uniform in
/// [0.5, 1.5], normalized to unit RMS. Pure function of its arguments.
Signal generate_band_signal(const BandSpec& band, double duration, double sample_rate,
                            std::uint64_t seed);

/// Adds white Gaussian noise with variance power(signal) / 10^(snr_db/10).
Signal add_noise(const Signal& signal, double snr_db, std::uint64_t seed);

/// The noise sequence `add_noise` would add for the given power and seed.
std::vector<double> white_noise(std::size_t n, double variance, std::uint64_t seed);

enum class SignalFormat { Auto, Csv, Json };

/// CSV: one amplitude per line, optional non-numeric header line; the rate
/// must be supplied. JSON: {"rate": r, "samples": [...]}; `rate`, if given,
/// overrides the file's value.
Signal load_signal(const std::filesystem::path& path, SignalFormat format = SignalFormat::Auto,
                   std::optional<double> rate = std::nullopt);

Signal parse_signal_csv(const std::string& text, double rate);
Signal parse_signal_json(const std::string& text, std::optional<double> rate = std::nullopt);

void save_signal_csv(const Signal& signal, const std::filesystem::path& path);

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace topobayes
