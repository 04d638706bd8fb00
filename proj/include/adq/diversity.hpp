// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adq/bins.hpp"
#include "adq/dataset.hpp"

namespace adq {

/// <a, b> / (|a| |b|), clamped to [-1, 1]. Throws ZeroVector, LengthMismatch.
double cosine(std::span<const double> a, std::span<const double> b);

/// Embedding network d(.): either the identity map or a two-layer perceptron
/// input -> tanh hidden -> linear output, applied after a fixed per-dimension
/// input standardization.
class Discriminator {
 public:
  static Discriminator identity();
  /// Weights ~ N(0, 1/fan_in), hidden biases ~ N(0, 0.01), output biases 0.
  static Discriminator mlp(std::size_t input, std::size_t hidden, std::size_t output, std::uint64_t seed);

  bool is_identity() const noexcept { return identity_; }
  std::size_t input_dim() const noexcept { return input_; }
  std::size_t hidden_dim() const noexcept { return hidden_; }
  std::size_t output_dim() const noexcept { return output_; }

  std::vector<double> embed(std::span<const double> x) const;

  /// Flat [W1 (hidden x input), b1, W2 (output x hidden), b2].
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  /// Standardizes inputs with the given samples' mean and standard deviation.
  void fit_input_scaling(std::span<const std::vector<double>> samples);

  /// Backpropagates dL/dz for one input, accumulating into a flat gradient.
  void accumulate_gradient(std::span<const double> x, std::span<const double> grad_output,
                           std::span<double> grad_params) const;

 private:
  struct Forward {
    std::vector<double> input;   // standardized
    std::vector<double> hidden;  // tanh activations
    std::vector<double> output;
  };
  Forward forward(std::span<const double> x) const;

  bool identity_ = true;
  std::size_t input_ = 0, hidden_ = 0, output_ = 0;
  std::vector<double> params_;
  std::vector<double> shift_, scale_;
};

enum class AugmentMode {
  Identity,      // x+ = x, test hook
  FeatureNoise,  // Gaussian noise, 0.05 * per-dimension std of the bin
  Pixel,         // flip / rotate / brightness, then re-featurize
};

/// Where discriminator inputs come from. Pixel mode needs images and the
/// projection that produced the features; channel means need images.
struct ViewSource {
  const FeatureTable* features = nullptr;
  const ImageTable* images = nullptr;
  const RandomProjection* projection = nullptr;
  AugmentMode mode = AugmentMode::FeatureNoise;
  bool channel_means = false;
};

/// Discriminator input for an item: its features, optionally followed by the
/// image's per-channel means in [0, 1].
std::vector<double> anchor_view(std::size_t item, const ViewSource& source);

/// Per-dimension noise scale for FeatureNoise mode: 0.05 * population std.
std::vector<double> feature_noise_scale(const Bin& bin, const FeatureTable& features);

/// Positive view x+ of an item. Pure function of (item, source, noise_scale, seed).
std::vector<double> augment_positive(std::size_t item, const ViewSource& source,
                                     std::span<const double> noise_scale, std::uint64_t seed);

/// Mean over anchors of -log(exp(cos(z_i, z_i+)/tau) / sum_{j != i} exp(cos(z_i, z_j)/tau)).
/// When gradient is non-null it receives dL/dparameters (resized as needed).
double contrastive_loss(const Discriminator& disc, std::span<const std::vector<double>> anchors,
                        std::span<const std::vector<double>> positives, double tau,
                        std::vector<double>* gradient = nullptr);

struct DiscriminatorOptions {
  bool identity = false;
  std::size_t hidden = 128;
  std::size_t output = 64;
  std::size_t epochs = 5;
  double learning_rate = 0.01;
};

struct TrainedDiscriminator {
  Discriminator discriminator;
  /// Loss before each update plus the final loss: epochs + 1 entries.
  std::vector<double> loss_curve;
};

/// Full-batch gradient descent on contrastive_loss. Throws BinTooSmall, or
/// InvalidArgument when tau <= 0.
TrainedDiscriminator train_discriminator(std::span<const std::vector<double>> anchors,
                                         std::span<const std::vector<double>> positives, double tau,
                                         const DiscriminatorOptions& options, std::uint64_t seed);

/// Builds views for the bin (positives from augment_positive with seed) and trains.
TrainedDiscriminator train_discriminator(const Bin& bin, const ViewSource& source, double tau,
                                         const DiscriminatorOptions& options, std::uint64_t seed);

struct DivScore {
  std::size_t bin = 0;
  double value = 0.0;
};

/// -(1/(N-1)) * mean_i [ sum_{j != i} exp(cos(z_i, z_j)/tau) / exp(cos(z_i, z_i+)/tau) ].
double diversity_energy(const Discriminator& disc, std::span<const std::vector<double>> anchors,
                        std::span<const std::vector<double>> positives, double tau);

/// Diversity of a bin with positives from augment_positive(seed). Throws BinTooSmall.
DivScore bin_diversity(const Bin& bin, const ViewSource& source, const Discriminator& disc, double tau,
                       std::uint64_t seed);

}  // namespace adq
