// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "adq/diversity.hpp"
#include "adq/error.hpp"
#include "adq/numeric.hpp"
#include "adq/rng.hpp"

namespace adq {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator Discriminator::identity() { return Discriminator{}; }

Discriminator Discriminator::mlp(std::size_t input, std::size_t hidden, std::size_t output, std::uint64_t seed) {
  if (input == 0 || hidden == 0 || output == 0) throw Error(Errc::InvalidArgument, "MLP sizes must be positive");
  Discriminator d;
  d.identity_ = false;
  d.input_ = input;
  d.hidden_ = hidden;
  d.output_ = output;
  d.params_.assign(hidden * input + hidden + output * hidden + output, 0.0);
  d.shift_.assign(input, 0.0);
  d.scale_.assign(input, 1.0);

  rng::Philox gen(seed, rng::substream(rng::Stream::DiscriminatorInit, 0));
  double* p = d.params_.data();
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input));
  for (std::size_t i = 0; i < hidden * input; ++i) *p++ = gen.normal() * s1;
  // Nonzero hidden biases keep d(0) away from the origin, where cosine is undefined.
  for (std::size_t i = 0; i < hidden; ++i) *p++ = gen.normal() * 0.1;
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < output * hidden; ++i) *p++ = gen.normal() * s2;
  return d;
}

void Discriminator::fit_input_scaling(std::span<const std::vector<double>> samples) {
  if (identity_ || samples.empty()) return;
  const double n = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < input_; ++k) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[k];
    mean /= n;
    double var = 0.0;
    for (const auto& s : samples) var += (s[k] - mean) * (s[k] - mean);
    const double sd = std::sqrt(var / n);
    shift_[k] = mean;
    scale_[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

Discriminator::Forward Discriminator::forward(std::span<const double> x) const {
  if (x.size() != input_) throw Error(Errc::LengthMismatch, "discriminator input has wrong dimension");
  Forward f{std::vector<double>(input_), std::vector<double>(hidden_), std::vector<double>(output_)};
  for (std::size_t k = 0; k < input_; ++k) f.input[k] = (x[k] - shift_[k]) * scale_[k];
  const double* w1 = params_.data();
  const double* b1 = w1 + hidden_ * input_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + output_ * hidden_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double acc = b1[h];
    for (std::size_t k = 0; k < input_; ++k) acc += w1[h * input_ + k] * f.input[k];
    f.hidden[h] = std::tanh(acc);
  }
  for (std::size_t o = 0; o < output_; ++o) {
    double acc = b2[o];
    for (std::size_t h = 0; h < hidden_; ++h) acc += w2[o * hidden_ + h] * f.hidden[h];
    f.output[o] = acc;
  }
  return f;
}

std::vector<double> Discriminator::embed(std::span<const double> x) const {
  if (identity_) return {x.begin(), x.end()};
  return forward(x).output;
}

void Discriminator::accumulate_gradient(std::span<const double> x, std::span<const double> grad_output,
                                        std::span<double> grad_params) const {
  if (identity_) return;
  const auto f = forward(x);
  double* g_w1 = grad_params.data();
  double* g_b1 = g_w1 + hidden_ * input_;
  double* g_w2 = g_b1 + hidden_;
  double* g_b2 = g_w2 + output_ * hidden_;
  const double* w2 = params_.data() + hidden_ * input_ + hidden_;

  std::vector<double> grad_hidden(hidden_, 0.0);
  for (std::size_t o = 0; o < output_; ++o) {
    const double go = grad_output[o];
    g_b2[o] += go;
    for (std::size_t h = 0; h < hidden_; ++h) {
      g_w2[o * hidden_ + h] += go * f.hidden[h];
      grad_hidden[h] += go * w2[o * hidden_ + h];
    }
  }
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double ga = grad_hidden[h] * (1.0 - f.hidden[h] * f.hidden[h]);
    g_b1[h] += ga;
    for (std::size_t k = 0; k < input_; ++k) g_w1[h * input_ + k] += ga * f.input[k];
  }
}

// ---------------------------------------------------------------------------
// Views

namespace {

std::vector<double> channel_means(std::span<const std::uint8_t> pixels, std::size_t channels) {
  std::vector<double> means(channels, 0.0);
  const std::size_t count = pixels.size() / channels;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < channels; ++c) means[c] += pixels[i * channels + c];
  }
  for (auto& m : means) m /= 255.0 * static_cast<double>(count);
  return means;
}

enum class PixelOp { FlipHorizontal, Rotate90, Rotate180, Rotate270, Brightness };

// Rotations are clockwise; 90/270 swap width and height.
std::vector<std::uint8_t> apply_pixel_op(const ImageView& image, PixelOp op, double brightness) {
  const std::size_t w = image.width, h = image.height, ch = image.channels;
  std::vector<std::uint8_t> out(image.pixels.size());
  const auto put = [&](std::size_t x, std::size_t y, std::size_t out_width, std::size_t sx, std::size_t sy) {
    for (std::size_t c = 0; c < ch; ++c) out[(y * out_width + x) * ch + c] = image.at(sx, sy, c);
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      switch (op) {
        case PixelOp::FlipHorizontal: put(w - 1 - x, y, w, x, y); break;
        case PixelOp::Rotate90: put(h - 1 - y, x, h, x, y); break;
        case PixelOp::Rotate180: put(w - 1 - x, h - 1 - y, w, x, y); break;
        case PixelOp::Rotate270: put(y, w - 1 - x, h, x, y); break;
        case PixelOp::Brightness:
          for (std::size_t c = 0; c < ch; ++c) {
            const double v = std::round(image.at(x, y, c) * brightness);
            out[(y * w + x) * ch + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
          }
          break;
      }
    }
  }
  return out;
}

void require_item(std::size_t item, const ViewSource& source) {
  if (source.features == nullptr) throw Error(Errc::InvalidArgument, "view source has no features");
  if (item >= source.features->size()) throw Error(Errc::UnknownId, "id " + std::to_string(item));
  if ((source.channel_means || source.mode == AugmentMode::Pixel) &&
      (source.images == nullptr || item >= source.images->size())) {
    throw Error(Errc::MissingImage, "no image for id " + std::to_string(item));
  }
}

}  // namespace

std::vector<double> anchor_view(std::size_t item, const ViewSource& source) {
  require_item(item, source);
  const auto f = source.features->row(item);
  std::vector<double> view(f.begin(), f.end());
  if (source.channel_means) {
    const auto image = source.images->image(item);
    const auto means = channel_means(image.pixels, image.channels);
    view.insert(view.end(), means.begin(), means.end());
  }
  return view;
}

std::vector<double> feature_noise_scale(const Bin& bin, const FeatureTable& features) {
  const std::size_t dim = features.dim();
  std::vector<double> scale(dim, 0.0);
  if (bin.members.empty()) return scale;
  const double n = static_cast<double>(bin.size());
  for (std::size_t k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (auto id : bin.members) mean += features.row(id)[k];
    mean /= n;
    double var = 0.0;
    for (auto id : bin.members) {
      const double diff = features.row(id)[k] - mean;
      var += diff * diff;
    }
    scale[k] = 0.05 * std::sqrt(var / n);
  }
  return scale;
}

std::vector<double> augment_positive(std::size_t item, const ViewSource& source, std::span<const double> noise_scale,
                                     std::uint64_t seed) {
  require_item(item, source);
  rng::Philox gen(seed, rng::substream(rng::Stream::Augment, item));
  switch (source.mode) {
    case AugmentMode::Identity:
      return anchor_view(item, source);
    case AugmentMode::FeatureNoise: {
      auto view = anchor_view(item, source);
      if (noise_scale.size() != source.features->dim()) throw Error(Errc::LengthMismatch, "noise scale dimension");
      for (std::size_t k = 0; k < noise_scale.size(); ++k) view[k] += noise_scale[k] * gen.normal();
      return view;
    }
    case AugmentMode::Pixel: {
      if (source.projection == nullptr) throw Error(Errc::InvalidArgument, "pixel augmentation needs a projection");
      const auto image = source.images->image(item);
      const auto op = static_cast<PixelOp>(gen.below(5));
      const double brightness = 0.9 + 0.2 * gen.uniform();
      const auto pixels = apply_pixel_op(image, op, brightness);
      const auto f = source.projection->apply(pixels);
      std::vector<double> view(f.begin(), f.end());
      if (source.channel_means) {
        const auto means = channel_means(pixels, image.channels);
        view.insert(view.end(), means.begin(), means.end());
      }
      return view;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Loss and training

namespace {

struct Embedded {
  std::vector<std::vector<double>> unit;  // z / |z|
  std::vector<double> norm;
};

Embedded embed_all(const Discriminator& disc, std::span<const std::vector<double>> inputs) {
  Embedded e;
  e.unit.reserve(inputs.size());
  for (const auto& x : inputs) {
    auto z = disc.embed(x);
    double n2 = 0.0;
    for (double v : z) n2 += v * v;
    if (n2 == 0.0) throw Error(Errc::ZeroVector, "discriminator produced a zero embedding");
    const double n = std::sqrt(n2);
    for (auto& v : z) v /= n;
    e.unit.push_back(std::move(z));
    e.norm.push_back(n);
  }
  return e;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return std::clamp(acc, -1.0, 1.0);
}

void check_views(std::span<const std::vector<double>> anchors, std::span<const std::vector<double>> positives,
                 double tau) {
  if (anchors.size() < 2) throw Error(Errc::BinTooSmall, "need at least 2 items, got " + std::to_string(anchors.size()));
  if (positives.size() != anchors.size()) throw Error(Errc::LengthMismatch, "one positive per anchor required");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(Errc::InvalidArgument, "tau must be > 0");
}

}  // namespace

double contrastive_loss(const Discriminator& disc, std::span<const std::vector<double>> anchors,
                        std::span<const std::vector<double>> positives, double tau, std::vector<double>* gradient) {
  check_views(anchors, positives, tau);
  const std::size_t n = anchors.size();
  const auto za = embed_all(disc, anchors);
  const auto zp = embed_all(disc, positives);

  // sim[i][j] = cos(z_i, z_j) / tau
  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sim[i * n + j] = sim[j * n + i] = dot(za.unit[i], za.unit[j]) / tau;
  }

  std::vector<double> per_anchor(n);
  std::vector<double> weights(n * n, 0.0);  // softmax over j != i
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) peak = std::max(peak, sim[i * n + j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      weights[i * n + j] = std::exp(sim[i * n + j] - peak);
      total += weights[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) weights[i * n + j] /= total;
    const double positive = dot(za.unit[i], zp.unit[i]) / tau;
    per_anchor[i] = -positive + peak + std::log(total);
  }
  const double loss = pairwise_sum(per_anchor) / static_cast<double>(n);

  if (gradient != nullptr) {
    gradient->assign(disc.parameters().size(), 0.0);
    if (disc.is_identity()) return loss;
    const double coeff = 1.0 / (static_cast<double>(n) * tau);
    const std::size_t e = za.unit[0].size();
    // dL/d(unit anchor) and dL/d(unit positive), then through the normalization.
    const auto through_norm = [e](const std::vector<double>& unit, double norm, std::vector<double>& g) {
      double radial = 0.0;
      for (std::size_t k = 0; k < e; ++k) radial += unit[k] * g[k];
      for (std::size_t k = 0; k < e; ++k) g[k] = (g[k] - unit[k] * radial) / norm;
    };
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> g(e, 0.0);
      for (std::size_t k = 0; k < e; ++k) g[k] = -zp.unit[i][k];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = weights[i * n + j] + weights[j * n + i];
        for (std::size_t k = 0; k < e; ++k) g[k] += w * za.unit[j][k];
      }
      for (auto& v : g) v *= coeff;
      through_norm(za.unit[i], za.norm[i], g);
      disc.accumulate_gradient(anchors[i], g, *gradient);

      std::vector<double> gp(e);
      for (std::size_t k = 0; k < e; ++k) gp[k] = -coeff * za.unit[i][k];
      through_norm(zp.unit[i], zp.norm[i], gp);
      disc.accumulate_gradient(positives[i], gp, *gradient);
    }
  }
  return loss;
}

TrainedDiscriminator train_discriminator(std::span<const std::vector<double>> anchors,
                                         std::span<const std::vector<double>> positives, double tau,
                                         const DiscriminatorOptions& options, std::uint64_t seed) {
  check_views(anchors, positives, tau);
  TrainedDiscriminator result{options.identity
                                  ? Discriminator::identity()
                                  : Discriminator::mlp(anchors[0].size(), options.hidden, options.output, seed),
                              {}};
  auto& disc = result.discriminator;
  disc.fit_input_scaling(anchors);
  std::vector<double> gradient;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    result.loss_curve.push_back(contrastive_loss(disc, anchors, positives, tau, &gradient));
    auto params = disc.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) params[p] -= options.learning_rate * gradient[p];
  }
  result.loss_curve.push_back(contrastive_loss(disc, anchors, positives, tau));
  return result;
}

namespace {

struct BinViews {
  std::vector<std::vector<double>> anchors, positives;
};

BinViews build_views(const Bin& bin, const ViewSource& source, std::uint64_t seed) {
  if (bin.size() < 2) throw Error(Errc::BinTooSmall, "bin " + std::to_string(bin.index) + " has fewer than 2 items");
  if (source.features == nullptr) throw Error(Errc::InvalidArgument, "view source has no features");
  for (auto id : bin.members) require_item(id, source);
  const auto noise = source.mode == AugmentMode::FeatureNoise ? feature_noise_scale(bin, *source.features)
                                                              : std::vector<double>{};
  BinViews views;
  for (auto id : bin.members) {
    views.anchors.push_back(anchor_view(id, source));
    views.positives.push_back(augment_positive(id, source, noise, seed));
  }
  return views;
}

}  // namespace

TrainedDiscriminator train_discriminator(const Bin& bin, const ViewSource& source, double tau,
                                         const DiscriminatorOptions& options, std::uint64_t seed) {
  const auto views = build_views(bin, source, seed);
  return train_discriminator(views.anchors, views.positives, tau, options, seed);
}

double diversity_energy(const Discriminator& disc, std::span<const std::vector<double>> anchors,
                        std::span<const std::vector<double>> positives, double tau) {
  check_views(anchors, positives, tau);
  const std::size_t n = anchors.size();
  const auto za = embed_all(disc, anchors);
  const auto zp = embed_all(disc, positives);
  std::vector<double> ratios(n);
  std::vector<double> terms(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double positive = dot(za.unit[i], zp.unit[i]);
    std::size_t t = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) terms[t++] = std::exp((dot(za.unit[i], za.unit[j]) - positive) / tau);
    }
    ratios[i] = pairwise_sum(terms);
  }
  const double mean = pairwise_sum(ratios) / static_cast<double>(n);
  return -mean / static_cast<double>(n - 1);
}

DivScore bin_diversity(const Bin& bin, const ViewSource& source, const Discriminator& disc, double tau,
                       std::uint64_t seed) {
  const auto views = build_views(bin, source, seed);
  return {bin.index, diversity_energy(disc, views.anchors, views.positives, tau)};
}

}  // namespace adq
