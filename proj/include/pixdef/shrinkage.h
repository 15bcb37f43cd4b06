#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pixdef/image.h"
#include "pixdef/wavelet.h"

namespace pixdef {

enum class ThresholdMode { none, hard, soft };
enum class ThresholdSelector { bayes, visu, sure, fixed };

std::optional<ThresholdMode> parse_threshold_mode(std::string_view name);
std::optional<ThresholdSelector> parse_threshold_selector(std::string_view name);
std::string_view to_string(ThresholdMode mode);
std::string_view to_string(ThresholdSelector selector);

struct ShrinkageRule {
  ThresholdMode mode = ThresholdMode::soft;
  ThresholdSelector selector = ThresholdSelector::bayes;
  double sigma = 0.04;           // noise scale for bayes / visu / sure
  double fixed_threshold = 0.0;  // fixed selector only
  bool estimate_sigma = false;   // replace sigma with the MAD estimate
};

void validate(const ShrinkageRule& rule);

// sign(x) * max(0, |x| - t)
std::vector<double> soft_threshold(std::span<const double> coeffs, double t);
// x if |x| > t, else 0
std::vector<double> hard_threshold(std::span<const double> coeffs, double t);

// BayesShrink: sigma^2 / sigma_x with sigma_x = sqrt(max(mean(x^2) - sigma^2, 0)).
// When sigma_x is 0 the band is treated as pure noise and max|x| is returned.
double bayes_threshold(std::span<const double> subband, double sigma);

// VisuShrink universal threshold sigma * sqrt(2 ln n).
double visu_threshold(double sigma, std::size_t n);

// SUREShrink for unit-variance noise. Minimises
//   SURE(t) = N - 2 #{i : |x_i| <= t} + sum_i min(|x_i|, t)^2
// over t in {0} U {|x_i|}; ties go to the smaller t. O(N log N).
double sure_threshold(std::span<const double> subband);
double sure_risk(std::span<const double> subband, double t);

// median(|HH_1|) / 0.6745 over the finest diagonal band.
double estimate_noise_mad(const WaveletPyramid& pyramid);

// Levels actually used for a rows x cols channel: min(spec.levels, max admissible).
WaveletSpec effective_spec(const WaveletSpec& spec, std::size_t rows, std::size_t cols);

// dwt2 -> threshold detail bands (approximation untouched) -> idwt2.
// spec.levels is capped to what the channel size admits.
Plane denoise_channel(const Plane& channel, const WaveletSpec& spec,
                      const ShrinkageRule& rule);

// denoise_channel on every channel independently (channels run in parallel).
Image denoise_channels(const Image& img, const WaveletSpec& spec,
                       const ShrinkageRule& rule);

// Colour images go through YCbCr, denoise_channels, and back to RGB; each of
// Y, Cb, Cr gets the same rule. Grey images are denoised directly.
Image denoise_image(const Image& img, const WaveletSpec& spec,
                    const ShrinkageRule& rule);

Plane extract_channel(const Image& img, std::size_t channel);

}  // namespace pixdef
