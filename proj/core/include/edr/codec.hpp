/*
 * Copyright 2026 The edr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "edr/core.hpp"

namespace edr {

// Quality-to-compression-ratio curve phi(d) = -a1 * log2(1 - a2 * d) + a3,
// strictly increasing and convex on [0,1].
struct CompressionModel {
  double a1 = 0.94;
  double a2 = 0.94;
  double a3 = 0.06;

  void validate() const;
  bool operator==(const CompressionModel&) const = default;
};

// Throws std::invalid_argument for d outside [0,1].
double phi(double d, const CompressionModel& model);

// Stored cost of a frame of raw cost c_raw kept at quality d:
// c_raw * phi(d) / phi(1).
double modeled_cost(double c_raw, double d, const CompressionModel& model);

struct PhiSample {
  double quality = 0.0;
  double ratio = 0.0;
};

struct PhiFit {
  CompressionModel model;
  double rms_residual = 0.0;
};

// Least-squares fit of (a1, a2, a3). Needs at least four samples spanning
// [0.1, 0.9].
PhiFit fit_phi(std::span<const PhiSample> samples);

class CodecError : public std::runtime_error {
 public:
  CodecError(std::uint64_t frame_id, const std::string& what)
      : std::runtime_error("frame " + std::to_string(frame_id) + ": " + what),
        frame_id_(frame_id) {}
  std::uint64_t frame_id() const { return frame_id_; }

 private:
  std::uint64_t frame_id_;
};

// Baseline JPEG through libjpeg. Grayscale (1 channel) and RGB (3 channels).
std::vector<std::uint8_t> jpeg_encode(const Image& image, int quality);
Image jpeg_decode(std::span<const std::uint8_t> payload);

struct EncodeOptions {
  int min_quality = 1;     // codec quality used for d = 0
  int max_quality = 100;   // codec quality used for d = 1
  bool discard_on_zero = false;
  std::uint64_t reference_bytes = 1280 * 720 * 3;

  bool operator==(const EncodeOptions&) const = default;
};

// Affine map of d onto the codec's integer quality scale.
int codec_quality(double d, const EncodeOptions& options);

struct EncodedFrame {
  std::vector<std::uint8_t> payload;
  double cost = 0.0;  // normalized against options.reference_bytes
};

EncodedFrame encode_frame(std::uint64_t frame_id, const Image& image, double d,
                          const EncodeOptions& options);

// Mean size ratio size(d) / size(1) over a set of images at each quality of
// an evenly spaced ladder with `steps` points on [0,1].
std::vector<PhiSample> measure_phi_samples(std::span<const Image> images, int steps,
                                           const EncodeOptions& options);

}  // namespace edr
