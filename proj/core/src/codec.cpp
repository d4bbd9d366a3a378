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

#include "edr/codec.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

#include <boost/math/tools/minima.hpp>

#include <jpeglib.h>

namespace edr {

void CompressionModel::validate() const {
  if (!(a1 > 0.0) || !(a2 > 0.0 && a2 < 1.0) || !(a3 >= 0.0)) {
    throw std::invalid_argument("compression model needs a1 > 0, 0 < a2 < 1, a3 >= 0");
  }
}

double phi(double d, const CompressionModel& model) {
  if (!(d >= 0.0 && d <= 1.0)) {
    throw std::invalid_argument("compression quality must lie in [0,1], got " + std::to_string(d));
  }
  return -model.a1 * std::log2(1.0 - model.a2 * d) + model.a3;
}

double modeled_cost(double c_raw, double d, const CompressionModel& model) {
  if (c_raw == 0.0) return 0.0;
  return c_raw * phi(d, model) / phi(1.0, model);
}

// ---------------------------------------------------------------------------
// Curve fit. For fixed a2 the model is linear in (a1, a3), so the fit reduces
// to a one-dimensional search over a2 with a closed-form inner solve.

namespace {

struct LinearFit {
  double a1 = 0.0;
  double a3 = 0.0;
  double sse = 0.0;
};

LinearFit solve_linear(std::span<const PhiSample> samples, double a2) {
  const double n = static_cast<double>(samples.size());
  double sg = 0, sr = 0, sgg = 0, sgr = 0;
  for (const auto& s : samples) {
    const double g = -std::log2(1.0 - a2 * s.quality);
    sg += g;
    sr += s.ratio;
    sgg += g * g;
    sgr += g * s.ratio;
  }
  LinearFit fit;
  const double var = sgg - sg * sg / n;
  if (var > 0.0) {
    fit.a1 = (sgr - sg * sr / n) / var;
    fit.a3 = (sr - fit.a1 * sg) / n;
  }
  if (fit.a3 < 0.0 || var <= 0.0) {
    fit.a3 = 0.0;
    fit.a1 = sgg > 0.0 ? sgr / sgg : 0.0;
  }
  for (const auto& s : samples) {
    const double e = fit.a1 * -std::log2(1.0 - a2 * s.quality) + fit.a3 - s.ratio;
    fit.sse += e * e;
  }
  if (fit.a1 <= 0.0) fit.sse = std::numeric_limits<double>::max();
  return fit;
}

}  // namespace

PhiFit fit_phi(std::span<const PhiSample> samples) {
  if (samples.size() < 4) {
    throw std::invalid_argument("fit_phi needs at least 4 samples, got " +
                                std::to_string(samples.size()));
  }
  auto [lo_it, hi_it] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const PhiSample& a, const PhiSample& b) { return a.quality < b.quality; });
  if (lo_it->quality > 0.1 || hi_it->quality < 0.9) {
    throw std::invalid_argument("fit_phi samples must span at least [0.1, 0.9]");
  }
  for (const auto& s : samples) {
    if (!(s.quality >= 0.0 && s.quality <= 1.0) || !std::isfinite(s.ratio)) {
      throw std::invalid_argument("fit_phi sample outside the model domain");
    }
  }

  auto sse = [&](double a2) { return solve_linear(samples, a2).sse; };

  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-9;
  constexpr int kGrid = 400;
  int best = 0;
  double best_sse = std::numeric_limits<double>::max();
  for (int i = 0; i <= kGrid; ++i) {
    const double a2 = kLo + (kHi - kLo) * i / kGrid;
    if (const double e = sse(a2); e < best_sse) {
      best_sse = e;
      best = i;
    }
  }
  const double lo = kLo + (kHi - kLo) * std::max(best - 1, 0) / kGrid;
  const double hi = kLo + (kHi - kLo) * std::min(best + 1, kGrid) / kGrid;
  const auto [a2, _] = boost::math::tools::brent_find_minima(
      sse, lo, hi, std::numeric_limits<double>::digits);

  const LinearFit lin = solve_linear(samples, a2);
  PhiFit fit;
  fit.model = CompressionModel{lin.a1, a2, lin.a3};
  fit.rms_residual = std::sqrt(lin.sse / static_cast<double>(samples.size()));
  fit.model.validate();
  return fit;
}

// ---------------------------------------------------------------------------
// libjpeg glue.

namespace {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Returns an empty string on success, the codec's message otherwise. Kept
// free of C++ objects with destructors because of the longjmp.
std::string compress(const Image& image, int quality, unsigned char** out, unsigned long* size) {
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_jpeg_error;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    return err.message;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, out, size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = image.channels;
  cinfo.in_color_space = image.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(image.pixels.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return {};
}

std::string decompress(std::span<const std::uint8_t> payload, Image* image) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_jpeg_error;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return err.message;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, payload.data(), static_cast<unsigned long>(payload.size()));
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  image->width = static_cast<int>(cinfo.output_width);
  image->height = static_cast<int>(cinfo.output_height);
  image->channels = cinfo.output_components;
  image->pixels.resize(image->byte_size());
  const std::size_t stride = static_cast<std::size_t>(image->width) * image->channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = image->pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return {};
}

}  // namespace

std::vector<std::uint8_t> jpeg_encode(const Image& image, int quality) {
  if (image.width <= 0 || image.height <= 0 || (image.channels != 1 && image.channels != 3) ||
      image.pixels.size() != image.byte_size()) {
    throw std::invalid_argument("jpeg_encode: malformed image");
  }
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  const std::string error = compress(image, std::clamp(quality, 1, 100), &buf, &size);
  std::vector<std::uint8_t> out;
  if (error.empty()) out.assign(buf, buf + size);
  std::free(buf);
  if (!error.empty()) throw std::runtime_error("jpeg encode failed: " + error);
  return out;
}

Image jpeg_decode(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw std::runtime_error("jpeg decode failed: empty payload");
  Image image;
  const std::string error = decompress(payload, &image);
  if (!error.empty()) throw std::runtime_error("jpeg decode failed: " + error);
  return image;
}

int codec_quality(double d, const EncodeOptions& options) {
  if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("quality decision outside [0,1]");
  const double span = options.max_quality - options.min_quality;
  return options.min_quality + static_cast<int>(std::lround(d * span));
}

EncodedFrame encode_frame(std::uint64_t frame_id, const Image& image, double d,
                          const EncodeOptions& options) {
  if (!(d >= 0.0 && d <= 1.0)) throw CodecError(frame_id, "quality decision outside [0,1]");
  if (d == 0.0 && options.discard_on_zero) return EncodedFrame{};
  EncodedFrame out;
  try {
    out.payload = jpeg_encode(image, codec_quality(d, options));
  } catch (const std::exception& e) {
    throw CodecError(frame_id, e.what());
  }
  out.cost = normalize_cost(out.payload.size(), options.reference_bytes);
  return out;
}

std::vector<PhiSample> measure_phi_samples(std::span<const Image> images, int steps,
                                           const EncodeOptions& options) {
  if (images.empty()) throw std::invalid_argument("phi calibration needs at least one image");
  if (steps < 4) throw std::invalid_argument("phi calibration needs at least 4 quality steps");
  std::vector<double> full;
  full.reserve(images.size());
  for (const Image& img : images) {
    full.push_back(static_cast<double>(jpeg_encode(img, options.max_quality).size()));
  }
  std::vector<PhiSample> samples;
  for (int i = 0; i < steps; ++i) {
    const double d = static_cast<double>(i) / (steps - 1);
    const int q = codec_quality(d, options);
    double ratio = 0.0;
    for (std::size_t k = 0; k < images.size(); ++k) {
      ratio += static_cast<double>(jpeg_encode(images[k], q).size()) / full[k];
    }
    samples.push_back(PhiSample{d, ratio / static_cast<double>(images.size())});
  }
  return samples;
}

}  // namespace edr
