#include "polyfuse/panoramic.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

namespace polyfuse {

void PalModel::validate() const {
    if (!(focal_mm > 0.0) || !(pixel_pitch_mm > 0.0)) {
        throw Error(ErrorCode::InvalidModel, "PAL focal length and pixel pitch must be positive");
    }
    if (!(theta_min > 0.0 && theta_min < theta_max && theta_max < std::numbers::pi)) {
        throw Error(ErrorCode::InvalidModel, "PAL FOV must satisfy 0 < theta_min < theta_max < pi");
    }
    if (!std::isfinite(center.u) || !std::isfinite(center.v)) {
        throw Error(ErrorCode::InvalidModel, "PAL centre is not finite");
    }
    // The radial polynomial must stay monotonic across the FOV.
    constexpr int kSteps = 256;
    double prev = radius_px(theta_min);
    for (int i = 1; i <= kSteps; ++i) {
        const double r = radius_px(theta_min + (theta_max - theta_min) * i / kSteps);
        if (!(r > prev)) {
            throw Error(ErrorCode::InvalidModel, "PAL radius is not increasing over the FOV");
        }
        prev = r;
    }
}

double PalModel::radius_px(double theta) const {
    double y = theta;
    double power = theta;
    for (double k : radial_coeffs) {
        power *= theta * theta;
        y += k * power;
    }
    return focal_mm * y / pixel_pitch_mm;
}

double PalModel::theta_at_radius(double radius) const {
    const double linear = radius * pixel_pitch_mm / focal_mm;
    if (radial_coeffs.empty()) return linear;
    double theta = linear;
    for (int it = 0; it < 50; ++it) {
        double y = theta, dy = 1.0, power = theta;
        for (std::size_t i = 0; i < radial_coeffs.size(); ++i) {
            const double n = static_cast<double>(2 * i + 3);
            dy += radial_coeffs[i] * n * power * theta;
            power *= theta * theta;
            y += radial_coeffs[i] * power;
        }
        const double step = (y - linear) / dy;
        theta -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return theta;
}

double pal_radius(const PalModel& model, double theta) {
    if (!(theta >= model.theta_min && theta <= model.theta_max)) {
        throw Error(ErrorCode::ThetaOutOfFov, "theta outside the PAL field of view");
    }
    return model.radius_px(theta);
}

int default_unwrap_width(const PalModel& model) {
    const double r_mid = 0.5 * (model.inner_radius() + model.outer_radius());
    return std::max(1, static_cast<int>(std::lround(2.0 * std::numbers::pi * r_mid)));
}

UnwrapMapping build_unwrap(const PalModel& model, int out_width) {
    model.validate();
    if (out_width < 1) {
        throw Error(ErrorCode::InvalidRange, "unwrap width must be at least 1");
    }
    const double r_in = model.inner_radius();
    const double r_out = model.outer_radius();
    const int out_height = std::max(1, static_cast<int>(std::lround(r_out - r_in)));
    const double step = out_height > 1 ? (r_out - r_in) / (out_height - 1) : 0.0;

    UnwrapMapping m;
    m.out_width = out_width;
    m.out_height = out_height;
    m.src_u.resize(static_cast<std::size_t>(out_width) * out_height);
    m.src_v.resize(m.src_u.size());

    std::vector<double> cos_az(out_width), sin_az(out_width);
    for (int col = 0; col < out_width; ++col) {
        const double az = model.azimuth_zero + 2.0 * std::numbers::pi * col / out_width;
        cos_az[col] = std::cos(az);
        sin_az[col] = std::sin(az);
    }
    for (int row = 0; row < out_height; ++row) {
        const double radius = r_in + row * step;
        for (int col = 0; col < out_width; ++col) {
            const std::size_t k = static_cast<std::size_t>(row) * out_width + col;
            m.src_u[k] = static_cast<float>(model.center.u + radius * cos_az[col]);
            m.src_v[k] = static_cast<float>(model.center.v + radius * sin_az[col]);
        }
    }
    return m;
}

Eigen::Vector3d pal_ray(const PalModel& model, const Pixel& px) {
    const double du = px.u - model.center.u;
    const double dv = px.v - model.center.v;
    const double theta = model.theta_at_radius(std::hypot(du, dv));
    if (!(theta >= model.theta_min && theta <= model.theta_max)) {
        throw Error(ErrorCode::OutsideAnnulus, "pixel is outside the PAL annulus");
    }
    const double az = std::atan2(dv, du);
    return {std::sin(theta) * std::cos(az), std::sin(theta) * std::sin(az), std::cos(theta)};
}

Pixel pal_project(const PalModel& model, const Eigen::Vector3d& direction) {
    const Eigen::Vector3d d = direction.normalized();
    const double theta = std::atan2(std::hypot(d.x(), d.y()), d.z());
    const double r = pal_radius(model, theta);
    const double az = std::atan2(d.y(), d.x());
    return {model.center.u + r * std::cos(az), model.center.v + r * std::sin(az)};
}

namespace {

constexpr std::array<char, 4> kMagic{'P', 'A', 'L', 'W'};

void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw Error(ErrorCode::Io, "truncated unwrap table");
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_unwrap_table(std::ostream& os, const UnwrapMapping& mapping) {
    os.write(kMagic.data(), 4);
    put_u32(os, static_cast<std::uint32_t>(mapping.out_width));
    put_u32(os, static_cast<std::uint32_t>(mapping.out_height));
    for (std::size_t k = 0; k < mapping.src_u.size(); ++k) {
        put_u32(os, std::bit_cast<std::uint32_t>(mapping.src_u[k]));
        put_u32(os, std::bit_cast<std::uint32_t>(mapping.src_v[k]));
    }
    if (!os) throw Error(ErrorCode::Io, "failed writing unwrap table");
}

UnwrapMapping read_unwrap_table(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || magic != kMagic) {
        throw Error(ErrorCode::Io, "not an unwrap table (bad magic)");
    }
    UnwrapMapping m;
    m.out_width = static_cast<int>(get_u32(is));
    m.out_height = static_cast<int>(get_u32(is));
    if (m.out_width < 0 || m.out_height < 0) {
        throw Error(ErrorCode::Io, "unwrap table dimensions overflow");
    }
    const std::size_t n = static_cast<std::size_t>(m.out_width) * m.out_height;
    m.src_u.resize(n);
    m.src_v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        m.src_u[k] = std::bit_cast<float>(get_u32(is));
        m.src_v[k] = std::bit_cast<float>(get_u32(is));
    }
    return m;
}

void save_unwrap_table(const std::string& path, const UnwrapMapping& mapping) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::Io, "cannot open " + path);
    write_unwrap_table(os, mapping);
}

UnwrapMapping load_unwrap_table(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::Io, "cannot open " + path);
    return read_unwrap_table(is);
}

}  // namespace polyfuse
