#include "mixscape/image_io.hpp"

#include "mixscape/errors.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace mixscape {

Raster to_raster(const GlyphImage& img, std::size_t upscale)
{
    if (upscale == 0)
        throw ConfigError("upscale must be >= 1");
    Raster r;
    r.width = img.width() * upscale;
    r.height = img.height() * upscale;
    r.rgb.resize(r.width * r.height * 3);
    for (std::size_t y = 0; y < r.height; ++y)
        for (std::size_t x = 0; x < r.width; ++x) {
            const std::size_t src = ((y / upscale) * img.width() + x / upscale) * 3;
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::clamp(img.pixels[src + c], 0.0, 1.0);
                r.rgb[(y * r.width + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    return r;
}

void write_ppm(const std::filesystem::path& path, const Raster& r)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw FormatError("cannot open " + path.string() + " for writing");
    os << "P6\n" << r.width << ' ' << r.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
    if (!os)
        throw FormatError("write failed: " + path.string());
}

Raster read_ppm(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("cannot open " + path.string());
    std::string magic;
    int maxval = 0;
    Raster r;
    is >> magic >> r.width >> r.height >> maxval;
    if (magic != "P6" || maxval != 255 || !is)
        throw FormatError("not an 8-bit binary PPM: " + path.string());
    is.get();
    r.rgb.resize(r.width * r.height * 3);
    is.read(reinterpret_cast<char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
    if (static_cast<std::size_t>(is.gcount()) != r.rgb.size())
        throw FormatError("truncated PPM: " + path.string());
    return r;
}

void write_png(const std::filesystem::path& path, const Raster& r)
{
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp)
        throw FormatError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < r.height; ++y)
        png_write_row(png, const_cast<png_bytep>(r.rgb.data() + y * r.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace mixscape
