#include "hullstereo/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hullstereo/errors.hpp"
#include "hullstereo/math.hpp"

namespace hullstereo {

namespace {

// Skips whitespace and '#' comment lines, then reads one token.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c))
        tok.push_back(static_cast<char>(c));
    if (tok.empty())
        throw IoError("unexpected end of header");
    return tok;
}

int parse_dim(const std::string& tok, const std::string& what) {
    size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        throw IoError("bad " + what + " in header: '" + tok + "'");
    }
    if (pos != tok.size() || v <= 0)
        throw IoError("bad " + what + " in header: '" + tok + "'");
    return v;
}

constexpr bool host_little_endian() {
    return std::endian::native == std::endian::little;
}

void byteswap_floats(std::vector<float>& v) {
    for (float& f : v) {
        uint32_t u;
        std::memcpy(&u, &f, 4);
        u = ((u & 0x000000ffu) << 24) | ((u & 0x0000ff00u) << 8) |
            ((u & 0x00ff0000u) >> 8) | ((u & 0xff000000u) >> 24);
        std::memcpy(&f, &u, 4);
    }
}

} // namespace

ByteImage pgm_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::string magic = next_token(in);
    if (magic != "P5")
        throw IoError(path + ": not a P5 PGM (magic '" + magic + "')");
    int w = parse_dim(next_token(in), "width");
    int h = parse_dim(next_token(in), "height");
    int maxval = parse_dim(next_token(in), "maxval");
    if (maxval != 255)
        throw IoError(path + ": unsupported maxval " + std::to_string(maxval));
    // Exactly one whitespace byte separates the header from pixel data; the
    // token reader already consumed it.
    ByteImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
    if (!in)
        throw IoError(path + ": truncated pixel data");
    return img;
}

void pgm_write(const std::string& path, const ByteImage& img) {
    if (img.width <= 0 || img.height <= 0)
        throw IoError("refusing to write empty PGM " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.size()));
    if (!out)
        throw IoError("short write to " + path);
}

GrayImage pgm_read_gray(const std::string& path) {
    ByteImage b = pgm_read(path);
    GrayImage g(b.width, b.height);
    for (size_t i = 0; i < b.data.size(); ++i)
        g.data[i] = static_cast<float>(b.data[i]) / 255.0f;
    return g;
}

void pgm_write_gray(const std::string& path, const GrayImage& img) {
    ByteImage b(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i) {
        float v = clamp(img.data[i], 0.0f, 1.0f) * 255.0f;
        b.data[i] = static_cast<uint8_t>(round_half_up(v));
    }
    pgm_write(path, b);
}

PfmImage pfm_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::string magic = next_token(in);
    int channels;
    if (magic == "Pf")
        channels = 1;
    else if (magic == "PF")
        channels = 3;
    else
        throw IoError(path + ": not a PFM (magic '" + magic + "')");
    int w = parse_dim(next_token(in), "width");
    int h = parse_dim(next_token(in), "height");
    std::string scale_tok = next_token(in);
    double scale = 0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw IoError(path + ": bad scale '" + scale_tok + "'");
    }
    if (scale == 0)
        throw IoError(path + ": zero scale");

    PfmImage img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.data.resize(static_cast<size_t>(w) * h * channels);

    const size_t row_floats = static_cast<size_t>(w) * channels;
    std::vector<float> row(row_floats);
    // Rows on disk run bottom-to-top.
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row_floats * 4));
        if (!in)
            throw IoError(path + ": truncated pixel data");
        std::memcpy(&img.data[static_cast<size_t>(y) * row_floats], row.data(), row_floats * 4);
    }
    bool file_little = scale < 0;
    if (file_little != host_little_endian())
        byteswap_floats(img.data);
    return img;
}

void pfm_write(const std::string& path, const PfmImage& img, bool big_endian) {
    if (img.width <= 0 || img.height <= 0)
        throw IoError("refusing to write empty PFM " + path);
    if (img.channels != 1 && img.channels != 3)
        throw IoError("PFM supports 1 or 3 channels, got " + std::to_string(img.channels));
    if (img.data.size() != static_cast<size_t>(img.width) * img.height * img.channels)
        throw IoError("PFM data size mismatch for " + path);

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << (img.channels == 1 ? "Pf" : "PF") << "\n"
        << img.width << " " << img.height << "\n"
        << (big_endian ? "1.0" : "-1.0") << "\n";

    const size_t row_floats = static_cast<size_t>(img.width) * img.channels;
    std::vector<float> row(row_floats);
    for (int y = img.height - 1; y >= 0; --y) {
        std::memcpy(row.data(), &img.data[static_cast<size_t>(y) * row_floats], row_floats * 4);
        if (big_endian == host_little_endian())
            byteswap_floats(row);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row_floats * 4));
    }
    if (!out)
        throw IoError("short write to " + path);
}

void feature_blob_write(const std::string& path, int width, int height, int channels,
                        const std::vector<float>& values) {
    if (values.size() != static_cast<size_t>(width) * height * channels)
        throw IoError("feature blob size mismatch for " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(static_cast<uint32_t>(width));
    put_u32(static_cast<uint32_t>(height));
    put_u32(static_cast<uint32_t>(channels));
    put_u32(kFeatureBlobMagic);
    std::vector<float> vals = values;
    if (!host_little_endian())
        byteswap_floats(vals);
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * 4));
    if (!out)
        throw IoError("short write to " + path);
}

std::vector<float> feature_blob_read(const std::string& path, int& width, int& height,
                                     int& channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    auto get_u32 = [&]() -> uint32_t {
        uint8_t b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in)
            throw IoError(path + ": truncated header");
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    };
    uint32_t w = get_u32(), h = get_u32(), c = get_u32(), magic = get_u32();
    if (magic != kFeatureBlobMagic)
        throw IoError(path + ": bad feature blob magic");
    if (w == 0 || h == 0 || c == 0 || w > 1u << 20 || h > 1u << 20 || c > 4096)
        throw IoError(path + ": implausible feature blob dimensions");
    width = static_cast<int>(w);
    height = static_cast<int>(h);
    channels = static_cast<int>(c);
    std::vector<float> vals(static_cast<size_t>(w) * h * c);
    in.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * 4));
    if (!in)
        throw IoError(path + ": truncated payload");
    if (!host_little_endian())
        byteswap_floats(vals);
    return vals;
}

} // namespace hullstereo
