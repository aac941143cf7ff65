#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "polyfuse/error.hpp"

namespace polyfuse {

/// Dense row-major image with interleaved channels.
template <typename T>
class Image {
public:
    using value_type = T;

    Image() = default;
    Image(int width, int height, int channels = 1, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        if (width < 0 || height < 0 || channels < 1) {
            throw Error(ErrorCode::DimensionMismatch, "negative image size");
        }
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    const T& operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    std::span<T> row(int y) noexcept {
        return {data_.data() + static_cast<std::size_t>(y) * width_ * channels_,
                static_cast<std::size_t>(width_) * channels_};
    }
    std::span<const T> row(int y) const noexcept {
        return {data_.data() + static_cast<std::size_t>(y) * width_ * channels_,
                static_cast<std::size_t>(width_) * channels_};
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    template <typename U>
    bool same_shape(const Image<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

/// Single-channel floating plane; NaN marks an invalid sample.
using Plane = Image<double>;
/// Intensity image on the 0..255 scale, one or three channels.
using GrayImage = Image<float>;
using Image8 = Image<std::uint8_t>;

enum class Interp { Nearest, Bilinear };

inline constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();

inline bool is_valid(double v) noexcept { return !std::isnan(v); }

/// Round-half-up conversion with saturation for integer targets.
template <typename T>
T saturate(double v) noexcept {
    if constexpr (std::is_integral_v<T>) {
        if (std::isnan(v)) return T{0};
        const double r = std::floor(v + 0.5);
        const double lo = static_cast<double>(std::numeric_limits<T>::min());
        const double hi = static_cast<double>(std::numeric_limits<T>::max());
        return static_cast<T>(std::clamp(r, lo, hi));
    } else {
        return static_cast<T>(v);
    }
}

template <typename T, typename U>
void require_same_shape(const Image<T>& a, const Image<U>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::DimensionMismatch, what);
    }
}

/// Samples channel `c` at a continuous position. Returns nullopt when the
/// position falls outside [0, W-1] x [0, H-1] (bilinear) or when the rounded
/// index falls outside the image (nearest).
template <typename T>
std::optional<double> sample(const Image<T>& img, double u, double v, int c, Interp interp) noexcept {
    if (!std::isfinite(u) || !std::isfinite(v)) return std::nullopt;
    if (interp == Interp::Nearest) {
        const double xu = std::floor(u + 0.5);
        const double yv = std::floor(v + 0.5);
        if (xu < 0 || yv < 0 || xu >= img.width() || yv >= img.height()) return std::nullopt;
        return static_cast<double>(img(static_cast<int>(xu), static_cast<int>(yv), c));
    }
    if (u < 0.0 || v < 0.0 || u > img.width() - 1 || v > img.height() - 1) return std::nullopt;
    const int x0 = static_cast<int>(std::floor(u));
    const int y0 = static_cast<int>(std::floor(v));
    const double ax = u - x0;
    const double ay = v - y0;
    // Taps with zero weight are skipped so an exact grid hit never touches
    // out-of-range or NaN neighbours.
    double acc = (1.0 - ax) * (1.0 - ay) * static_cast<double>(img(x0, y0, c));
    if (ax > 0.0) acc += ax * (1.0 - ay) * static_cast<double>(img(x0 + 1, y0, c));
    if (ay > 0.0) {
        acc += (1.0 - ax) * ay * static_cast<double>(img(x0, y0 + 1, c));
        if (ax > 0.0) acc += ax * ay * static_cast<double>(img(x0 + 1, y0 + 1, c));
    }
    return acc;
}

/// Generic backward-mapping resampler. `source_of(x, y)` returns the source
/// position for output pixel (x, y), or nullopt for "no source".
template <typename T, typename MapFn>
Image<T> remap(const Image<T>& src, int out_width, int out_height, MapFn&& source_of,
               Interp interp, T fill) {
    Image<T> out(out_width, out_height, src.channels(), fill);
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            const auto pos = source_of(x, y);
            if (!pos) continue;
            for (int c = 0; c < src.channels(); ++c) {
                if (auto s = sample(src, pos->first, pos->second, c, interp)) {
                    out(x, y, c) = saturate<T>(*s);
                }
            }
        }
    }
    return out;
}

/// Rec. 601 luma for three-channel input; copies single-channel input.
template <typename T>
GrayImage to_gray(const Image<T>& img) {
    GrayImage out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (img.channels() >= 3) {
                out(x, y) = static_cast<float>(0.299 * img(x, y, 0) + 0.587 * img(x, y, 1) +
                                               0.114 * img(x, y, 2));
            } else {
                out(x, y) = static_cast<float>(img(x, y, 0));
            }
        }
    }
    return out;
}

}  // namespace polyfuse
