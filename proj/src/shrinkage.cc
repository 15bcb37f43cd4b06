#include "pixdef/shrinkage.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pixdef/error.h"

namespace pixdef {
namespace {

constexpr double kMadToSigma = 0.6745;

void check_threshold(double t) {
  if (!(t >= 0.0)) throw Error("threshold must be >= 0, got " + std::to_string(t));
}

void soft_in_place(std::vector<double>& v, double t) {
  for (double& x : v) {
    const double m = std::abs(x) - t;
    x = m > 0.0 ? std::copysign(m, x) : 0.0;
  }
}

void hard_in_place(std::vector<double>& v, double t) {
  for (double& x : v) {
    if (!(std::abs(x) > t)) x = 0.0;
  }
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

std::optional<ThresholdMode> parse_threshold_mode(std::string_view name) {
  if (name == "none") return ThresholdMode::none;
  if (name == "hard") return ThresholdMode::hard;
  if (name == "soft") return ThresholdMode::soft;
  return std::nullopt;
}

std::optional<ThresholdSelector> parse_threshold_selector(std::string_view name) {
  if (name == "bayes") return ThresholdSelector::bayes;
  if (name == "visu") return ThresholdSelector::visu;
  if (name == "sure") return ThresholdSelector::sure;
  if (name == "fixed") return ThresholdSelector::fixed;
  return std::nullopt;
}

std::string_view to_string(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::none: return "none";
    case ThresholdMode::hard: return "hard";
    case ThresholdMode::soft: return "soft";
  }
  return "unknown";
}

std::string_view to_string(ThresholdSelector selector) {
  switch (selector) {
    case ThresholdSelector::bayes: return "bayes";
    case ThresholdSelector::visu: return "visu";
    case ThresholdSelector::sure: return "sure";
    case ThresholdSelector::fixed: return "fixed";
  }
  return "unknown";
}

void validate(const ShrinkageRule& rule) {
  if (!(rule.sigma >= 0.0)) throw Error("shrinkage: sigma must be >= 0");
  if (rule.selector == ThresholdSelector::fixed) check_threshold(rule.fixed_threshold);
}

std::vector<double> soft_threshold(std::span<const double> coeffs, double t) {
  check_threshold(t);
  std::vector<double> out(coeffs.begin(), coeffs.end());
  soft_in_place(out, t);
  return out;
}

std::vector<double> hard_threshold(std::span<const double> coeffs, double t) {
  check_threshold(t);
  std::vector<double> out(coeffs.begin(), coeffs.end());
  hard_in_place(out, t);
  return out;
}

double bayes_threshold(std::span<const double> subband, double sigma) {
  if (subband.empty()) throw Error("bayes_threshold: empty subband");
  if (!(sigma >= 0.0)) throw Error("bayes_threshold: sigma must be >= 0");
  double sum_sq = 0.0;
  double peak = 0.0;
  for (double x : subband) {
    sum_sq += x * x;
    peak = std::max(peak, std::abs(x));
  }
  const double var = sigma * sigma;
  const double signal = std::sqrt(std::max(sum_sq / static_cast<double>(subband.size()) - var, 0.0));
  if (signal == 0.0) return peak;
  return var / signal;
}

double visu_threshold(double sigma, std::size_t n) {
  if (n == 0) throw Error("visu_threshold: coefficient count must be >= 1");
  if (!(sigma >= 0.0)) throw Error("visu_threshold: sigma must be >= 0");
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

double sure_risk(std::span<const double> subband, double t) {
  double below = 0.0;
  double clipped = 0.0;
  for (double x : subband) {
    const double a = std::abs(x);
    if (a <= t) below += 1.0;
    const double m = std::min(a, t);
    clipped += m * m;
  }
  return static_cast<double>(subband.size()) - 2.0 * below + clipped;
}

double sure_threshold(std::span<const double> subband) {
  if (subband.empty()) throw Error("sure_threshold: empty subband");
  std::vector<double> mag(subband.size());
  std::transform(subband.begin(), subband.end(), mag.begin(),
                 [](double x) { return std::abs(x); });
  std::sort(mag.begin(), mag.end());
  const auto n = static_cast<double>(mag.size());

  // t = 0: only exact zeros count as <= t and nothing is clipped.
  const auto zeros = static_cast<double>(
      std::upper_bound(mag.begin(), mag.end(), 0.0) - mag.begin());
  double best_t = 0.0;
  double best_risk = n - 2.0 * zeros;

  // For t = mag[i] with i the last index of its tie group:
  //   #{<= t} = i + 1,  sum min(|x|,t)^2 = sum_{j<=i} mag[j]^2 + (N-i-1) t^2
  double prefix_sq = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    prefix_sq += mag[i] * mag[i];
    if (i + 1 < mag.size() && mag[i + 1] == mag[i]) continue;
    const double t = mag[i];
    const double risk = n - 2.0 * static_cast<double>(i + 1) + prefix_sq +
                        (n - static_cast<double>(i + 1)) * t * t;
    if (risk < best_risk) {
      best_risk = risk;
      best_t = t;
    }
  }
  return best_t;
}

double estimate_noise_mad(const WaveletPyramid& pyramid) {
  if (pyramid.levels.empty()) throw Error("estimate_noise_mad: pyramid has no levels");
  const auto& hh = pyramid.levels.front().diagonal.data;
  if (hh.empty()) throw Error("estimate_noise_mad: empty diagonal band");
  std::vector<double> mag(hh.size());
  std::transform(hh.begin(), hh.end(), mag.begin(), [](double x) { return std::abs(x); });
  return median(std::move(mag)) / kMadToSigma;
}

WaveletSpec effective_spec(const WaveletSpec& spec, std::size_t rows, std::size_t cols) {
  WaveletSpec out = spec;
  out.levels = std::min(spec.levels, max_levels(rows, cols));
  return out;
}

Plane denoise_channel(const Plane& channel, const WaveletSpec& spec,
                      const ShrinkageRule& rule) {
  validate(rule);
  const WaveletSpec eff = effective_spec(spec, channel.rows, channel.cols);
  if (eff.levels < 1) throw Error("denoise: channel too small for a wavelet level");
  WaveletPyramid pyr = dwt2(channel, eff);

  if (rule.mode != ThresholdMode::none) {
    const double sigma = rule.estimate_sigma ? estimate_noise_mad(pyr) : rule.sigma;
    const double visu = rule.selector == ThresholdSelector::visu
                            ? visu_threshold(sigma, pyr.coefficient_count())
                            : 0.0;
    const auto select = [&](const std::vector<double>& band) {
      switch (rule.selector) {
        case ThresholdSelector::bayes: return bayes_threshold(band, sigma);
        case ThresholdSelector::visu: return visu;
        case ThresholdSelector::fixed: return rule.fixed_threshold;
        case ThresholdSelector::sure: {
          if (sigma == 0.0) return 0.0;
          std::vector<double> scaled(band.size());
          std::transform(band.begin(), band.end(), scaled.begin(),
                         [&](double x) { return x / sigma; });
          return sure_threshold(scaled) * sigma;
        }
      }
      return 0.0;
    };
    for (auto& level : pyr.levels) {
      for (Plane* band : {&level.horizontal, &level.vertical, &level.diagonal}) {
        const double t = select(band->data);
        if (rule.mode == ThresholdMode::soft) {
          soft_in_place(band->data, t);
        } else {
          hard_in_place(band->data, t);
        }
      }
    }
  }
  return idwt2(pyr, eff);
}

Plane extract_channel(const Image& img, std::size_t channel) {
  Plane out(img.height(), img.width());
  const auto v = img.values();
  const std::size_t c = img.channels();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = v[i * c + channel];
  return out;
}

Image denoise_channels(const Image& img, const WaveletSpec& spec,
                       const ShrinkageRule& rule) {
  validate(rule);
  const std::size_t channels = img.channels();
  std::vector<Plane> planes(channels);
  std::string failure;
#pragma omp parallel for schedule(static) if (img.size() > 3 * 128 * 128)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(channels); ++c) {
    try {
      planes[c] = denoise_channel(extract_channel(img, c), spec, rule);
    } catch (const std::exception& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) throw Error(failure);
  Grid out(img.height(), img.width(), channels);
  auto dst = out.values();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < planes[c].data.size(); ++i) {
      dst[i * channels + c] = planes[c].data[i];
    }
  }
  return Image::clamped(std::move(out));
}

Image denoise_image(const Image& img, const WaveletSpec& spec,
                    const ShrinkageRule& rule) {
  if (img.channels() != 3) return denoise_channels(img, spec, rule);
  return ycbcr_to_rgb(denoise_channels(rgb_to_ycbcr(img), spec, rule));
}

}  // namespace pixdef
