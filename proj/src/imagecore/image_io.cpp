#include "imagecore/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <csetjmp>

#include <jpeglib.h>
#include <png.h>

#include "common/error.hpp"

namespace cseg::img {
namespace {

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw_io("read failed for '" + path + "'");
    return bytes;
}

void check_raster(const RawImage& image, const std::string& context) {
    if (image.height <= 0 || image.width <= 0)
        throw_format(context + ": non-positive dimensions");
    if (image.channels != 1 && image.channels != 3)
        throw_format(context + ": unsupported channel count " + std::to_string(image.channels));
    const std::size_t expect =
        static_cast<std::size_t>(image.height) * image.width * image.channels;
    if (image.data.size() != expect)
        throw_format(context + ": pixel buffer size mismatch");
}

// ---- PNG ----------------------------------------------------------------

RawImage read_png(const std::string& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw_format("PNG '" + path + "': " + png.message);

    RawImage out;
    out.height = static_cast<int>(png.height);
    out.width = static_cast<int>(png.width);
    out.channels = (png.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
    png.format = out.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    out.data.resize(PNG_IMAGE_SIZE(png));

    if (!png_image_finish_read(&png, nullptr, out.data.data(), 0, nullptr)) {
        std::string message = png.message;
        png_image_free(&png);
        throw_format("PNG '" + path + "': " + message);
    }
    check_raster(out, "PNG '" + path + "'");
    return out;
}

void write_png(const std::string& path, const RawImage& image) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.height = static_cast<png_uint_32>(image.height);
    png.width = static_cast<png_uint_32>(image.width);
    png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr))
        throw_io("PNG write '" + path + "': " + png.message);
}

// ---- PNM (P2/P5 gray, P3/P6 color, 8-bit) --------------------------------

struct PnmCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
};

int pnm_token(PnmCursor& c, const std::string& path) {
    // Skip whitespace and '#' comments, then read a decimal integer.
    for (;;) {
        while (c.pos < c.bytes.size() && std::isspace(c.bytes[c.pos])) ++c.pos;
        if (c.pos < c.bytes.size() && c.bytes[c.pos] == '#') {
            while (c.pos < c.bytes.size() && c.bytes[c.pos] != '\n') ++c.pos;
            continue;
        }
        break;
    }
    if (c.pos >= c.bytes.size() || !std::isdigit(c.bytes[c.pos]))
        throw_format("PNM '" + path + "': malformed header");
    long value = 0;
    while (c.pos < c.bytes.size() && std::isdigit(c.bytes[c.pos])) {
        value = value * 10 + (c.bytes[c.pos] - '0');
        if (value > 1'000'000'000) throw_format("PNM '" + path + "': header value out of range");
        ++c.pos;
    }
    return static_cast<int>(value);
}

RawImage read_pnm(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    RawImage out;
    const char kind = static_cast<char>(bytes[1]);
    out.channels = (kind == '3' || kind == '6') ? 3 : 1;
    PnmCursor c{bytes, 2};
    out.width = pnm_token(c, path);
    out.height = pnm_token(c, path);
    const int maxval = pnm_token(c, path);
    if (maxval <= 0 || maxval > 255)
        throw_format("PNM '" + path + "': only 8-bit rasters supported (maxval " +
                     std::to_string(maxval) + ")");
    const std::size_t expect =
        static_cast<std::size_t>(out.height) * out.width * out.channels;
    if (kind == '2' || kind == '3') {  // ASCII samples
        out.data.resize(expect);
        for (auto& v : out.data) {
            const int s = pnm_token(c, path);
            if (s > maxval) throw_format("PNM '" + path + "': sample exceeds maxval");
            v = static_cast<std::uint8_t>(s);
        }
    } else {
        ++c.pos;  // single whitespace byte after maxval
        if (bytes.size() < c.pos + expect)
            throw_format("PNM '" + path + "': truncated pixel data");
        out.data.assign(bytes.begin() + c.pos, bytes.begin() + c.pos + expect);
    }
    if (maxval != 255)
        for (auto& v : out.data)
            v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    check_raster(out, "PNM '" + path + "'");
    return out;
}

void write_pnm(const std::string& path, const RawImage& image) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw_io("cannot open '" + path + "' for writing");
    outf << (image.channels == 3 ? "P6" : "P5") << '\n'
         << image.width << ' ' << image.height << "\n255\n";
    outf.write(reinterpret_cast<const char*>(image.data.data()),
               static_cast<std::streamsize>(image.data.size()));
    if (!outf) throw_io("write failed for '" + path + "'");
}

// ---- JPEG (read only) ---------------------------------------------------

struct JpegErrorHook {
    jpeg_error_mgr pub;
    std::jmp_buf unwind;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* hook = reinterpret_cast<JpegErrorHook*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, hook->message);
    std::longjmp(hook->unwind, 1);
}

RawImage read_jpeg(const std::string& path) {
    std::FILE* file = std::fopen(path.c_str(), "rb");
    if (!file) throw_io("cannot open '" + path + "' for reading");

    jpeg_decompress_struct cinfo{};
    JpegErrorHook hook{};
    cinfo.err = jpeg_std_error(&hook.pub);
    hook.pub.error_exit = jpeg_error_exit;

    RawImage out;  // constructed before setjmp; longjmp re-enters this frame
    if (setjmp(hook.unwind)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(file);
        throw_format("JPEG '" + path + "': " + hook.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    out.height = static_cast<int>(cinfo.output_height);
    out.width = static_cast<int>(cinfo.output_width);
    out.channels = cinfo.output_components;
    out.data.resize(static_cast<std::size_t>(out.height) * out.width * out.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(out.width) * out.channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data.data() + cinfo.output_scanline * row_bytes;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(file);
    check_raster(out, "JPEG '" + path + "'");
    return out;
}

// ---- BMP (read only: uncompressed 1/8/24-bit, the region-of-interest
//      rasters shipped with change-detection datasets) ---------------------

std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

RawImage read_bmp(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 54) throw_format("BMP '" + path + "': truncated header");
    const std::uint32_t pixel_offset = le32(&bytes[10]);
    const std::uint32_t header_size = le32(&bytes[14]);
    if (header_size < 40) throw_format("BMP '" + path + "': unsupported header");
    const std::int32_t raw_height = static_cast<std::int32_t>(le32(&bytes[22]));
    const bool bottom_up = raw_height > 0;
    const int width = static_cast<int>(le32(&bytes[18]));
    const int height = bottom_up ? raw_height : -raw_height;
    const int bpp = le16(&bytes[28]);
    const std::uint32_t compression = le32(&bytes[30]);
    if (compression != 0)
        throw_format("BMP '" + path + "': only uncompressed rasters supported");
    if (bpp != 1 && bpp != 8 && bpp != 24)
        throw_format("BMP '" + path + "': unsupported bit depth " + std::to_string(bpp));
    if (width <= 0 || height <= 0) throw_format("BMP '" + path + "': bad dimensions");

    // Palette sits between the info header and the pixel data (BGRA entries).
    std::uint32_t palette_count = le32(&bytes[46]);
    if (bpp <= 8 && palette_count == 0) palette_count = 1u << bpp;
    const std::size_t palette_at = 14 + header_size;
    std::vector<std::uint8_t> palette_gray(palette_count);
    std::vector<bool> palette_is_gray(palette_count);
    std::vector<std::array<std::uint8_t, 3>> palette_rgb(palette_count);
    bool all_gray = true;
    for (std::uint32_t i = 0; i < palette_count; ++i) {
        const std::size_t at = palette_at + 4u * i;
        if (at + 4 > bytes.size()) throw_format("BMP '" + path + "': truncated palette");
        const std::uint8_t b = bytes[at], g = bytes[at + 1], r = bytes[at + 2];
        palette_rgb[i] = {r, g, b};
        palette_is_gray[i] = (r == g && g == b);
        palette_gray[i] = r;
        all_gray = all_gray && palette_is_gray[i];
    }

    const std::size_t row_stride = ((static_cast<std::size_t>(width) * bpp + 31) / 32) * 4;
    if (bytes.size() < pixel_offset + row_stride * height)
        throw_format("BMP '" + path + "': truncated pixel data");

    RawImage out;
    out.height = height;
    out.width = width;
    out.channels = (bpp == 24 || (bpp <= 8 && !all_gray)) ? 3 : 1;
    out.data.resize(static_cast<std::size_t>(height) * width * out.channels);
    for (int y = 0; y < height; ++y) {
        const int src_y = bottom_up ? height - 1 - y : y;
        const std::uint8_t* row = bytes.data() + pixel_offset + row_stride * src_y;
        for (int x = 0; x < width; ++x) {
            std::uint8_t* dst = out.data.data() +
                                (static_cast<std::size_t>(y) * width + x) * out.channels;
            if (bpp == 24) {
                dst[0] = row[3 * x + 2];
                dst[1] = row[3 * x + 1];
                dst[2] = row[3 * x];
            } else {
                const int index = bpp == 8 ? row[x] : ((row[x / 8] >> (7 - x % 8)) & 1);
                if (static_cast<std::uint32_t>(index) >= palette_count)
                    throw_format("BMP '" + path + "': palette index out of range");
                if (out.channels == 1) {
                    dst[0] = palette_gray[index];
                } else {
                    dst[0] = palette_rgb[index][0];
                    dst[1] = palette_rgb[index][1];
                    dst[2] = palette_rgb[index][2];
                }
            }
        }
    }
    return out;
}

std::string lower_ext(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return {};
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace

RawImage read_image(const std::string& path) {
    const std::vector<std::uint8_t> bytes = slurp(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return read_png(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' &&
        (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6'))
        return read_pnm(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 0xff && bytes[1] == 0xd8) return read_jpeg(path);
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return read_bmp(path, bytes);
    throw_format("'" + path + "': unrecognized image signature");
}

void write_image(const std::string& path, const RawImage& image) {
    check_raster(image, "'" + path + "'");
    const std::string ext = lower_ext(path);
    if (ext == "png") {
        write_png(path, image);
    } else if (ext == "pgm" || ext == "ppm") {
        if ((ext == "pgm") != (image.channels == 1))
            throw_invalid("'" + path + "': extension does not match channel count");
        write_pnm(path, image);
    } else {
        throw_invalid("'" + path + "': unsupported output format '" + ext + "'");
    }
}

Frame read_frame(const std::string& path) {
    const RawImage raw = read_image(path);
    if (raw.channels == 3) return to_unit_rgb(raw.data.data(), raw.height, raw.width);
    Frame f(raw.height, raw.width);
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        const float v = raw.data[i] * (1.0f / 255.0f);
        f.data[i] = v;
        f.data[f.pixel_count() + i] = v;
        f.data[2 * f.pixel_count() + i] = v;
    }
    return f;
}

void write_frame(const std::string& path, const Frame& f) {
    RawImage raw;
    raw.height = f.height;
    raw.width = f.width;
    raw.channels = 3;
    raw.data = to_byte_rgb(f);
    write_image(path, raw);
}

RawImage encode_mask(const LabelMask& m) {
    RawImage raw;
    raw.height = m.height;
    raw.width = m.width;
    raw.channels = 1;
    raw.data.resize(m.labels.size());
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        switch (m.labels[i]) {
            case Label::Background: raw.data[i] = kMaskBackground; break;
            case Label::Foreground: raw.data[i] = kMaskForeground; break;
            case Label::Ignore: raw.data[i] = kMaskIgnore; break;
        }
    }
    return raw;
}

LabelMask decode_mask(const RawImage& image) {
    if (image.channels != 1) throw_format("mask image must be single-channel");
    LabelMask m(image.height, image.width);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        switch (image.data[i]) {
            case kMaskBackground: m.labels[i] = Label::Background; break;
            case kMaskForeground: m.labels[i] = Label::Foreground; break;
            case kMaskIgnore: m.labels[i] = Label::Ignore; break;
            default:
                throw_format("mask byte " + std::to_string(image.data[i]) +
                             " is not one of the mask codes 0/170/255");
        }
    }
    return m;
}

void write_mask(const std::string& path, const LabelMask& m) {
    write_image(path, encode_mask(m));
}

LabelMask read_mask(const std::string& path) {
    return decode_mask(read_image(path));
}

}  // namespace cseg::img
