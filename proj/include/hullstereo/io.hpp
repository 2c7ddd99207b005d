#pragma once

#include <string>
#include <vector>

#include "hullstereo/image.hpp"

namespace hullstereo {

// --- PGM (P5, 8-bit) ---------------------------------------------------
// Masks use >=128 as foreground.

ByteImage pgm_read(const std::string& path);
void pgm_write(const std::string& path, const ByteImage& img);

GrayImage pgm_read_gray(const std::string& path);            // values / 255
void pgm_write_gray(const std::string& path, const GrayImage& img); // clamped, *255 rounded

// --- PFM ----------------------------------------------------------------
// Header "Pf\n<w> <h>\n<scale>\n" (or "PF" for 3 channels), float32 rows
// stored bottom-to-top. Negative scale marks little-endian data. NaN values
// encode invalid pixels and survive round-trips bit-exactly.

struct PfmImage {
    int width = 0, height = 0, channels = 1;
    std::vector<float> data; // row-major, top-to-bottom, interleaved channels

    float& at(int x, int y, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

PfmImage pfm_read(const std::string& path);
void pfm_write(const std::string& path, const PfmImage& img, bool big_endian = false);

// --- raw feature blob ----------------------------------------------------
// 16-byte header: width, height, channels, magic (uint32 little-endian each),
// then width*height*channels float32 values.

inline constexpr uint32_t kFeatureBlobMagic = 0x54414546u; // "FEAT"

void feature_blob_write(const std::string& path, int width, int height, int channels,
                        const std::vector<float>& values);
std::vector<float> feature_blob_read(const std::string& path, int& width, int& height, int& channels);

} // namespace hullstereo
