#pragma once

#include <cstdint>
#include <string>

#include "polyfuse/image.hpp"
#include "polyfuse/polarization.hpp"
#include "polyfuse/stereo.hpp"

namespace polyfuse::io {

using Image16 = Image<std::uint16_t>;

/// Reads an 8-bit PNG. `channels` = 1 or 3 converts as needed (RGB order);
/// 0 keeps the file's layout.
Image8 read_png(const std::string& path, int channels = 0);
/// Reads a single-channel 8- or 16-bit PNG as 16-bit (8-bit values scaled by 257).
Image16 read_png16(const std::string& path);

void write_png(const std::string& path, const Image8& img);
void write_png(const std::string& path, const Image16& img);

/// Mosaic PNG: 16-bit single channel, intensity = value / 65535 (8-bit
/// files use value / 255).
MosaicFrame read_mosaic(const std::string& path, const MosaicLayout& layout = {});
void write_mosaic(const std::string& path, const MosaicFrame& mosaic);

/// 16-bit millimetres, 0 = invalid, saturating at 65.535 m.
Image16 encode_depth_mm(const DepthMap& depth);
DepthMap decode_depth_mm(const Image16& img, double z_min = 0.0, double z_max = 65.535);

/// 255 = DoLP 1.0; invalid pixels become 0.
Image8 encode_dolp_gray(const Plane& dolp);
/// Linear blue (0) to red (1) colour map; invalid pixels are black.
Image8 dolp_pseudocolor(const Plane& dolp);

/// Rounds a 0..255 float image into 8 bits; single-channel input is
/// replicated to three channels when `rgb` is set.
Image8 to_image8(const GrayImage& img, bool rgb = false);

}  // namespace polyfuse::io
