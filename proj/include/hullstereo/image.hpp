#pragma once

#include <cstdint>
#include <vector>

#include "hullstereo/math.hpp"

namespace hullstereo {

template <typename T>
struct Image {
    int width = 0, height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    // Replicate padding.
    const T& at_clamped(int x, int y) const {
        return at(clamp(x, 0, width - 1), clamp(y, 0, height - 1));
    }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

using GrayImage = Image<float>;   // intensities in [0, 1]
using ByteImage = Image<uint8_t>; // binary masks use 0 / 255

inline ByteImage threshold_mask(const GrayImage& img, float fg_at = 0.5f) {
    ByteImage m(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i) m.data[i] = img.data[i] >= fg_at ? 255 : 0;
    return m;
}

// 4x4 box mean, the guide image for edge-aware smoothing at feature scale.
inline GrayImage box_downsample4(const GrayImage& img) {
    int w = (img.width + 3) / 4, h = (img.height + 3) / 4;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float sum = 0.0f;
            for (int dy = 0; dy < 4; ++dy)
                for (int dx = 0; dx < 4; ++dx)
                    sum += img.at_clamped(4 * x + dx, 4 * y + dy);
            out.at(x, y) = sum / 16.0f;
        }
    }
    return out;
}

} // namespace hullstereo
