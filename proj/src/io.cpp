#include "polyfuse/io.hpp"

#include <cstring>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace polyfuse::io {

namespace {

cv::Mat load(const std::string& path, int flags) {
    cv::Mat m = cv::imread(path, flags);
    if (m.empty()) throw Error(ErrorCode::Io, "cannot read image " + path);
    return m;
}

void store(const std::string& path, const cv::Mat& m) {
    bool ok = false;
    try {
        ok = cv::imwrite(path, m);
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::Io, "cannot write " + path + ": " + e.what());
    }
    if (!ok) throw Error(ErrorCode::Io, "cannot write " + path);
}

template <typename T>
Image<T> from_mat(const cv::Mat& m) {
    Image<T> img(m.cols, m.rows, m.channels());
    for (int y = 0; y < m.rows; ++y) {
        std::memcpy(img.row(y).data(), m.ptr<T>(y), img.row(y).size_bytes());
    }
    return img;
}

template <typename T>
cv::Mat to_mat(const Image<T>& img, int depth) {
    cv::Mat m(img.height(), img.width(), CV_MAKETYPE(depth, img.channels()));
    for (int y = 0; y < img.height(); ++y) {
        std::memcpy(m.ptr<T>(y), img.row(y).data(), img.row(y).size_bytes());
    }
    return m;
}

}  // namespace

Image8 read_png(const std::string& path, int channels) {
    cv::Mat m = load(path, cv::IMREAD_UNCHANGED);
    if (m.depth() == CV_16U) m.convertTo(m, CV_8U, 1.0 / 257.0);
    if (m.depth() != CV_8U) throw Error(ErrorCode::Io, "unsupported pixel depth in " + path);
    if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
    if (m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
    if (channels == 1 && m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_RGB2GRAY);
    if (channels == 3 && m.channels() == 1) cv::cvtColor(m, m, cv::COLOR_GRAY2RGB);
    return from_mat<std::uint8_t>(m);
}

Image16 read_png16(const std::string& path) {
    cv::Mat m = load(path, cv::IMREAD_UNCHANGED);
    if (m.channels() != 1) throw Error(ErrorCode::Io, path + " must be single-channel");
    if (m.depth() == CV_8U) m.convertTo(m, CV_16U, 257.0);
    if (m.depth() != CV_16U) throw Error(ErrorCode::Io, "unsupported pixel depth in " + path);
    return from_mat<std::uint16_t>(m);
}

void write_png(const std::string& path, const Image8& img) {
    cv::Mat m = to_mat(img, CV_8U);
    if (img.channels() == 3) cv::cvtColor(m, m, cv::COLOR_RGB2BGR);
    store(path, m);
}

void write_png(const std::string& path, const Image16& img) { store(path, to_mat(img, CV_16U)); }

MosaicFrame read_mosaic(const std::string& path, const MosaicLayout& layout) {
    cv::Mat m = load(path, cv::IMREAD_UNCHANGED);
    if (m.channels() != 1) throw Error(ErrorCode::Io, "mosaic " + path + " must be single-channel");
    double scale = 0.0;
    if (m.depth() == CV_8U) {
        scale = 1.0 / 255.0;
    } else if (m.depth() == CV_16U) {
        scale = 1.0 / 65535.0;
    } else {
        throw Error(ErrorCode::Io, "unsupported mosaic depth in " + path);
    }
    cv::Mat d;
    m.convertTo(d, CV_64F, scale);
    MosaicFrame frame;
    frame.intensity = from_mat<double>(d);
    frame.layout = layout;
    return frame;
}

void write_mosaic(const std::string& path, const MosaicFrame& mosaic) {
    Image16 img(mosaic.width(), mosaic.height());
    for (std::size_t k = 0; k < img.size(); ++k) {
        img.data()[k] = saturate<std::uint16_t>(65535.0 * mosaic.intensity.data()[k]);
    }
    write_png(path, img);
}

Image16 encode_depth_mm(const DepthMap& depth) {
    Image16 img(depth.width(), depth.height());
    for (std::size_t k = 0; k < img.size(); ++k) {
        const double z = depth.z.data()[k];
        img.data()[k] = is_valid(z) && z > 0.0 ? std::max<std::uint16_t>(1, saturate<std::uint16_t>(1000.0 * z)) : 0;
    }
    return img;
}

DepthMap decode_depth_mm(const Image16& img, double z_min, double z_max) {
    DepthMap d;
    d.z = Plane(img.width(), img.height(), 1, kInvalid);
    d.z_min = z_min;
    d.z_max = z_max;
    for (std::size_t k = 0; k < img.size(); ++k) {
        if (img.data()[k] != 0) d.z.data()[k] = img.data()[k] / 1000.0;
    }
    return d;
}

Image8 encode_dolp_gray(const Plane& dolp) {
    Image8 img(dolp.width(), dolp.height());
    for (std::size_t k = 0; k < img.size(); ++k) {
        const double p = dolp.data()[k];
        img.data()[k] = is_valid(p) ? saturate<std::uint8_t>(255.0 * std::clamp(p, 0.0, 1.0)) : 0;
    }
    return img;
}

Image8 dolp_pseudocolor(const Plane& dolp) {
    Image8 img(dolp.width(), dolp.height(), 3, 0);
    for (int y = 0; y < dolp.height(); ++y) {
        for (int x = 0; x < dolp.width(); ++x) {
            const double p = dolp(x, y);
            if (!is_valid(p)) continue;
            const double c = std::clamp(p, 0.0, 1.0);
            img(x, y, 0) = saturate<std::uint8_t>(255.0 * c);
            img(x, y, 2) = saturate<std::uint8_t>(255.0 * (1.0 - c));
        }
    }
    return img;
}

Image8 to_image8(const GrayImage& img, bool rgb) {
    const int channels = rgb ? 3 : img.channels();
    Image8 out(img.width(), img.height(), channels);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < channels; ++c) {
                out(x, y, c) = saturate<std::uint8_t>(img(x, y, std::min(c, img.channels() - 1)));
            }
        }
    }
    return out;
}

}  // namespace polyfuse::io
