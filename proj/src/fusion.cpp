#include "polyfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace polyfuse {

ClassTable::ClassTable(std::vector<ClassEntry> entries) : entries_(std::move(entries)) { validate(); }

ClassTable ClassTable::defaults() {
    return ClassTable({
        {0, "road", {128, 64, 128}},
        {1, "sidewalk", {244, 35, 232}},
        {8, "vegetation", {107, 142, 35}},
        {9, "terrain", {152, 251, 152}},
        {10, "sky", {70, 130, 180}},
        {11, "person", {220, 20, 60}},
        {13, "car", {0, 0, 142}},
        {19, "water_hazard", {0, 0, 255}},
        {kVoid, "void", {0, 0, 0}},
    });
}

void ClassTable::validate() const {
    std::set<int> ids;
    std::set<std::string> names;
    for (const auto& e : entries_) {
        if (!ids.insert(e.id).second) {
            throw Error(ErrorCode::InvalidConfig, "duplicate class id " + std::to_string(e.id));
        }
        if (!names.insert(e.name).second) {
            throw Error(ErrorCode::InvalidConfig, "duplicate class name " + e.name);
        }
    }
    for (const char* required : {"road", "water_hazard", "void"}) {
        if (!names.contains(required)) {
            throw Error(ErrorCode::InvalidConfig, std::string("class table lacks ") + required);
        }
    }
    if (id_of("void") != kVoid) {
        throw Error(ErrorCode::InvalidConfig, "void must use id 255");
    }
}

const ClassEntry* ClassTable::find(std::uint8_t id) const noexcept {
    for (const auto& e : entries_) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::uint8_t ClassTable::id_of(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.id;
    }
    throw Error(ErrorCode::UnknownClass, "no class named " + std::string(name));
}

void validate_labels(const LabelMap& labels, const ClassTable& table) {
    std::array<bool, 256> known{};
    for (const auto& e : table.entries()) known[e.id] = true;
    for (std::uint8_t id : labels.data()) {
        if (!known[id]) {
            throw Error(ErrorCode::UnknownClass, "label map holds unknown class id " + std::to_string(id));
        }
    }
}

void RegistrationRig::validate() const {
    K_color.validate();
    K_polar.validate();
    T_color_to_polar.validate();
}

CameraIntrinsics superpixel_intrinsics(const CameraIntrinsics& K_mosaic) {
    CameraIntrinsics K = K_mosaic;
    K.fx = K_mosaic.fx / 2.0;
    K.fy = K_mosaic.fy / 2.0;
    K.cx = (K_mosaic.cx - 0.5) / 2.0;
    K.cy = (K_mosaic.cy - 0.5) / 2.0;
    K.width = K_mosaic.width / 2;
    K.height = K_mosaic.height / 2;
    return K;
}

Pixel reproject_pixel(const RegistrationRig& rig, const Pixel& u_color, double z) {
    if (!(z > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "reprojection depth must be positive");
    }
    // Infinite homography K_p R K_c^-1 plus the parallax term K_p t / z. The
    // columns are formed so that an identity rig maps every pixel onto itself
    // without rounding.
    const CameraIntrinsics& Kc = rig.K_color;
    const Eigen::Matrix3d M = rig.K_polar.matrix() * rig.T_color_to_polar.R;
    Eigen::Matrix3d H;
    H.col(0) = M.col(0) / Kc.fx;
    H.col(1) = M.col(1) / Kc.fy;
    H.col(2) = M.col(2) - H.col(0) * Kc.cx - H.col(1) * Kc.cy;
    const Eigen::Vector3d q = H * Eigen::Vector3d(u_color.u, u_color.v, 1.0) +
                              rig.K_polar.matrix() * rig.T_color_to_polar.t / z;
    if (!(q.z() > 0.0)) {
        throw Error(ErrorCode::BehindCamera, "point lies behind the polarization camera");
    }
    return {q.x() / q.z(), q.y() / q.z()};
}

double dolp_lookup(const Plane& dolp, const Pixel& u, Interp mode) {
    if (!(u.u >= 0.0 && u.v >= 0.0 && u.u <= dolp.width() - 1 && u.v <= dolp.height() - 1)) {
        throw Error(ErrorCode::OutOfBounds, "lookup position outside the DoLP plane");
    }
    if (mode == Interp::Nearest) {
        return dolp(static_cast<int>(std::floor(u.u + 0.5)), static_cast<int>(std::floor(u.v + 0.5)));
    }
    const int x0 = static_cast<int>(std::floor(u.u));
    const int y0 = static_cast<int>(std::floor(u.v));
    const double ax = u.u - x0;
    const double ay = u.v - y0;
    struct Tap {
        int x, y;
        double w;
    };
    const std::array<Tap, 4> taps{Tap{x0, y0, (1 - ax) * (1 - ay)}, Tap{x0 + 1, y0, ax * (1 - ay)},
                                  Tap{x0, y0 + 1, (1 - ax) * ay}, Tap{x0 + 1, y0 + 1, ax * ay}};
    double acc = 0.0;
    bool all_valid = true;
    const Tap* best = nullptr;
    for (const auto& t : taps) {
        if (t.w <= 0.0) continue;
        const double v = dolp(t.x, t.y);
        if (!is_valid(v)) {
            all_valid = false;
            continue;
        }
        acc += t.w * v;
        if (!best || t.w > best->w) best = &t;
    }
    if (all_valid) return acc;
    return best ? dolp(best->x, best->y) : kInvalid;
}

LabelMap detect_water(const LabelMap& labels, const DepthMap& depth, const Plane& dolp,
                      const RegistrationRig& rig, const ClassTable& table, const WaterParams& params) {
    require_same_shape(labels, depth.z, "labels and depth differ in size");
    if (!(params.delta >= 0.0 && params.delta <= 1.0)) {
        throw Error(ErrorCode::InvalidThreshold, "delta must lie in [0, 1]");
    }
    if (labels.width() != rig.K_color.width || labels.height() != rig.K_color.height) {
        throw Error(ErrorCode::DimensionMismatch, "labels do not match the colour intrinsics");
    }
    if (dolp.width() != rig.K_polar.width || dolp.height() != rig.K_polar.height) {
        throw Error(ErrorCode::DimensionMismatch, "DoLP plane does not match the polarization intrinsics");
    }
    const std::uint8_t road = table.id_of("road");
    const std::uint8_t water = table.id_of("water_hazard");
    const double max_u = dolp.width() - 1;
    const double max_v = dolp.height() - 1;

    LabelMap out = labels;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            if (labels(x, y) != road) continue;
            const double z = depth.z(x, y);
            if (!(z > 0.0)) continue;
            const Point3 p = transform_point(rig.T_color_to_polar, backproject(rig.K_color, {double(x), double(y)}, z));
            if (!(p.z() > 0.0)) continue;
            const Pixel up = project(rig.K_polar, p);
            if (!(up.u >= 0.0 && up.v >= 0.0 && up.u <= max_u && up.v <= max_v)) continue;
            if (dolp_lookup(dolp, up, params.lookup) >= params.delta) out(x, y) = water;
        }
    }
    return out;
}

Image8 overlay_visualization(const Image8& color, const LabelMap& labels, const ClassTable& table, double alpha) {
    require_same_shape(color, labels, "image and labels differ in size");
    if (color.channels() != 3) {
        throw Error(ErrorCode::DimensionMismatch, "overlay needs an RGB image");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::InvalidRange, "alpha must lie in [0, 1]");
    }
    Image8 out = color;
    for (int y = 0; y < color.height(); ++y) {
        for (int x = 0; x < color.width(); ++x) {
            const std::uint8_t id = labels(x, y);
            if (id == ClassTable::kVoid) continue;
            const ClassEntry* e = table.find(id);
            if (!e) throw Error(ErrorCode::UnknownClass, "label id " + std::to_string(id));
            for (int c = 0; c < 3; ++c) {
                out(x, y, c) = saturate<std::uint8_t>(alpha * e->color[c] + (1.0 - alpha) * color(x, y, c));
            }
        }
    }
    return out;
}

DepthMap fill_depth_median(const DepthMap& depth, int k) {
    if (k < 1 || k % 2 == 0) {
        throw Error(ErrorCode::InvalidRange, "median window must be odd and positive");
    }
    DepthMap out = depth;
    const int r = k / 2;
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(k) * k);
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            if (is_valid(depth.z(x, y))) continue;
            window.clear();
            for (int j = std::max(0, y - r); j <= std::min(depth.height() - 1, y + r); ++j) {
                for (int i = std::max(0, x - r); i <= std::min(depth.width() - 1, x + r); ++i) {
                    if (is_valid(depth.z(i, j))) window.push_back(depth.z(i, j));
                }
            }
            if (window.empty()) continue;
            const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            double med = *mid;
            if (window.size() % 2 == 0) {
                med = 0.5 * (med + *std::max_element(window.begin(), mid));
            }
            out.z(x, y) = med;
        }
    }
    return out;
}

}  // namespace polyfuse
