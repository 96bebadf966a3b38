#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "ampiifd/error.hpp"
#include "ampiifd/image.hpp"

namespace ampiifd {
namespace {

namespace fs = std::filesystem;

constexpr double kRed = 0.299;
constexpr double kGreen = 0.587;
constexpr double kBlue = 0.114;

[[noreturn]] void input_error(const fs::path& path, const std::string& what) {
  fail(ErrorKind::Input, what + ": " + path.string());
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  return FilePtr(std::fopen(path.c_str(), mode));
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

// Converts interleaved samples (1 or 3+ channels) to luminance.
Image to_luminance(int w, int h, int channels, double maxval,
                   const auto& sample /* (index) -> double */) {
  Image img(w, h);
  auto out = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t base = i * channels;
    double v;
    if (channels >= 3) {
      v = kRed * sample(base) + kGreen * sample(base + 1) + kBlue * sample(base + 2);
    } else {
      v = sample(base);
    }
    out[i] = std::clamp(v / maxval, 0.0, 1.0);
  }
  return img;
}

// ---- PNG ----

Image load_png(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  if (!f) input_error(path, "unreadable file");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    input_error(path, "cannot initialise PNG decoder");
  }
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    input_error(path, "corrupt PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth < 8) depth = 8;
  if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
  png_read_update_info(png, info);
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(h));
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (w <= 0 || h <= 0) input_error(path, "zero-dimension image");

  if (depth == 16) {
    return to_luminance(w, h, channels, 65535.0, [&](std::size_t i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      return static_cast<double>(v);
    });
  }
  return to_luminance(w, h, channels, 255.0, [&](std::size_t i) {
    return static_cast<double>(buffer[i]);
  });
}

void write_png(const fs::path& path, int w, int h, int channels,
               const std::vector<unsigned char>& bytes) {
  FilePtr f = open_file(path, "wb");
  if (!f) input_error(path, "unwritable path");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    input_error(path, "cannot initialise PNG encoder");
  }
  std::vector<png_const_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * channels;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    input_error(path, "PNG encoding failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---- PGM / PPM ----

Image load_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) input_error(path, "unreadable file");
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") input_error(path, "unsupported format");
  const auto next_int = [&]() {
    // Skip whitespace and '#' comments between header tokens.
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string line;
        std::getline(in, line);
        continue;
      }
      break;
    }
    long v = -1;
    in >> v;
    if (!in) input_error(path, "malformed PNM header");
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w <= 0 || h <= 0) input_error(path, "zero-dimension image");
  if (maxval <= 0 || maxval > 65535) input_error(path, "malformed PNM header");
  in.get();  // single whitespace before the raster
  const int channels = magic == "P6" ? 3 : 1;
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels *
                                 bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    input_error(path, "truncated PNM raster");
  }
  return to_luminance(static_cast<int>(w), static_cast<int>(h), channels,
                      static_cast<double>(maxval), [&](std::size_t i) {
                        if (bytes_per_sample == 1) return static_cast<double>(raw[i]);
                        // PNM 16-bit samples are big-endian.
                        return static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
                      });
}

void write_pnm(const fs::path& path, int w, int h, int channels,
               const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) input_error(path, "unwritable path");
  out << (channels == 3 ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) input_error(path, "write failed");
}

// ---- TIFF ----

struct TiffCloser {
  void operator()(TIFF* t) const noexcept {
    if (t) TIFFClose(t);
  }
};

Image load_tiff(const fs::path& path) {
  TIFFSetWarningHandler(nullptr);
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "r"));
  if (!tif) input_error(path, "unreadable file");
  std::uint32_t w = 0, h = 0;
  std::uint16_t bits = 8, spp = 1, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  if (w == 0 || h == 0) input_error(path, "zero-dimension image");
  if ((bits != 8 && bits != 16) || planar != PLANARCONFIG_CONTIG ||
      (spp != 1 && spp < 3)) {
    input_error(path, "unsupported format");
  }
  const std::size_t line = TIFFScanlineSize(tif.get());
  std::vector<unsigned char> raw(line * h);
  for (std::uint32_t y = 0; y < h; ++y) {
    if (TIFFReadScanline(tif.get(), raw.data() + line * y, y) < 0) {
      input_error(path, "corrupt TIFF");
    }
  }
  const std::size_t row_samples = static_cast<std::size_t>(w) * spp;
  const auto sample = [&](std::size_t i) {
    const std::size_t y = i / row_samples;
    const std::size_t off = i % row_samples;
    if (bits == 8) return static_cast<double>(raw[y * line + off]);
    std::uint16_t v;
    std::memcpy(&v, raw.data() + y * line + 2 * off, 2);
    return static_cast<double>(v);
  };
  const double maxval = bits == 8 ? 255.0 : 65535.0;
  Image img(static_cast<int>(w), static_cast<int>(h));
  auto out = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t base = i * spp;
    const double v = spp >= 3 ? kRed * sample(base) + kGreen * sample(base + 1) +
                                    kBlue * sample(base + 2)
                              : sample(base);
    out[i] = std::clamp(v / maxval, 0.0, 1.0);
  }
  return img;
}

void write_tiff(const fs::path& path, int w, int h,
                const std::vector<unsigned char>& bytes) {
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) input_error(path, "unwritable path");
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(w));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(h));
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 8);
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 1);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(h));
  if (TIFFWriteEncodedStrip(tif.get(), 0, const_cast<unsigned char*>(bytes.data()),
                            static_cast<tmsize_t>(bytes.size())) < 0) {
    input_error(path, "TIFF encoding failed");
  }
}

std::array<unsigned char, 8> read_magic(const fs::path& path) {
  std::array<unsigned char, 8> magic{};
  std::ifstream in(path, std::ios::binary);
  if (!in) input_error(path, "unreadable file");
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  if (in.gcount() < 2) input_error(path, "unsupported format");
  return magic;
}

}  // namespace

unsigned char to_byte(double v) noexcept {
  const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<unsigned char>(std::floor(scaled + 0.5));
}

Image load_image(const fs::path& path) {
  if (!fs::is_regular_file(path)) input_error(path, "unreadable file");
  const auto m = read_magic(path);
  if (m[0] == 0x89 && m[1] == 'P' && m[2] == 'N' && m[3] == 'G') return load_png(path);
  if (m[0] == 'P' && (m[1] == '5' || m[1] == '6')) return load_pnm(path);
  if ((m[0] == 'I' && m[1] == 'I') || (m[0] == 'M' && m[1] == 'M')) {
    return load_tiff(path);
  }
  input_error(path, "unsupported format");
}

void save_image(const Image& img, const fs::path& path) {
  if (img.empty()) fail(ErrorKind::InvalidArgument, "cannot save an empty image");
  std::vector<unsigned char> bytes(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(src[i]);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, img.width(), img.height(), 1, bytes);
  } else if (ext == ".pgm") {
    write_pnm(path, img.width(), img.height(), 1, bytes);
  } else if (ext == ".tif" || ext == ".tiff") {
    write_tiff(path, img.width(), img.height(), bytes);
  } else {
    fail(ErrorKind::InvalidArgument, "unsupported output extension: " + ext);
  }
}

void save_image(const RgbImage& img, const fs::path& path) {
  if (img.width() <= 0 || img.height() <= 0) {
    fail(ErrorKind::InvalidArgument, "cannot save an empty image");
  }
  auto src = img.data();
  std::vector<unsigned char> bytes(src.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(src[i]);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, img.width(), img.height(), 3, bytes);
  } else if (ext == ".ppm") {
    write_pnm(path, img.width(), img.height(), 3, bytes);
  } else {
    fail(ErrorKind::InvalidArgument, "unsupported output extension: " + ext);
  }
}

}  // namespace ampiifd
