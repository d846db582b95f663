/* Copyright 2026 The camrefine Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "camrefine/dataio.hpp"
#include "camrefine/errors.hpp"

namespace camrefine::dataio {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenForRead(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kMissingFile, "file not found: " + path.string());
  }
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

// Raw palette indices straight from the file. Everything that outlives a
// longjmp lives in this caller-owned struct.
struct PaletteImage {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int color_type = 0;
  int bit_depth = 0;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  char message[256] = {0};
};

void PngError(png_structp png, png_const_charp msg) {
  auto* out = static_cast<PaletteImage*>(png_get_error_ptr(png));
  std::snprintf(out->message, sizeof(out->message), "%s", msg);
  png_longjmp(png, 1);
}

void PngWarning(png_structp, png_const_charp) {}

// Returns false on a libpng error; out->message then holds the reason.
bool ReadPaletteRaw(std::FILE* fp, PaletteImage* out) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, out, PngError, PngWarning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->color_type = png_get_color_type(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  if (out->color_type != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
  }
  if (out->bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  const png_size_t row_bytes = png_get_rowbytes(png, info);
  out->pixels.resize(row_bytes * out->height);
  out->rows.resize(out->height);
  for (png_uint_32 r = 0; r < out->height; ++r) {
    out->rows[r] = out->pixels.data() + r * row_bytes;
  }
  png_read_image(png, out->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

void WritePngImage(const fs::path& path, png_image* image, const void* buffer,
                   const void* colormap) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  if (!png_image_write_to_file(image, path.c_str(), 0, buffer, 0, colormap)) {
    const std::string msg = image->message;
    png_image_free(image);
    throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + msg);
  }
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

struct JpegImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;
  JpegErrorManager err;
};

bool ReadJpegRaw(std::FILE* fp, JpegImage* out) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&out->err.base);
  out->err.base.error_exit = JpegErrorExit;
  if (setjmp(out->err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out->width = static_cast<int>(cinfo.output_width);
  out->height = static_cast<int>(cinfo.output_height);
  out->rgb.resize(static_cast<std::size_t>(out->width) * out->height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out->rgb.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) * out->width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

bool HasPngSignature(std::FILE* fp) {
  unsigned char sig[8] = {0};
  const std::size_t n = std::fread(sig, 1, sizeof(sig), fp);
  std::rewind(fp);
  return n == sizeof(sig) && png_sig_cmp(sig, 0, sizeof(sig)) == 0;
}

ImageTensor FromBytes(int height, int width, const unsigned char* rgb) {
  std::vector<float> data(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = rgb[i] / 255.0f;
  return ImageTensor(height, width, std::move(data));
}

}  // namespace

const std::array<std::array<std::uint8_t, 3>, 256>& VocPalette() {
  static const auto palette = [] {
    std::array<std::array<std::uint8_t, 3>, 256> p{};
    for (int i = 0; i < 256; ++i) {
      int r = 0, g = 0, b = 0, c = i;
      for (int j = 0; j < 8; ++j) {
        r |= ((c >> 0) & 1) << (7 - j);
        g |= ((c >> 1) & 1) << (7 - j);
        b |= ((c >> 2) & 1) << (7 - j);
        c >>= 3;
      }
      p[i] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
              static_cast<std::uint8_t>(b)};
    }
    return p;
  }();
  return palette;
}

ImageTensor ReadImage(const fs::path& path) {
  FilePtr fp = OpenForRead(path);
  if (HasPngSignature(fp.get())) {
    fp.reset();
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
      throw Error(ErrorCode::kFormat, path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
      const std::string msg = image.message;
      png_image_free(&image);
      throw Error(ErrorCode::kFormat, path.string() + ": " + msg);
    }
    return FromBytes(static_cast<int>(image.height), static_cast<int>(image.width),
                     rgb.data());
  }
  JpegImage jpeg;
  if (!ReadJpegRaw(fp.get(), &jpeg)) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + jpeg.err.message);
  }
  return FromBytes(jpeg.height, jpeg.width, jpeg.rgb.data());
}

void WriteRgbPng(const fs::path& path, int height, int width,
                 const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3) {
    throw Error(ErrorCode::kDimension, "RGB buffer size mismatch");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  WritePngImage(path, &image, rgb.data(), nullptr);
}

LabelMap ReadLabelPng(const fs::path& path, int max_class) {
  FilePtr fp = OpenForRead(path);
  PaletteImage raw;
  if (!ReadPaletteRaw(fp.get(), &raw)) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + raw.message);
  }
  if (raw.color_type != PNG_COLOR_TYPE_PALETTE) {
    throw Error(ErrorCode::kFormat,
                path.string() + " is not a palette-indexed PNG (color type " +
                    std::to_string(raw.color_type) + ")");
  }
  std::vector<std::uint8_t> data(raw.pixels.begin(), raw.pixels.end());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int v = data[i];
    if (v > max_class && v != kIgnoreLabel) {
      throw Error(ErrorCode::kFormat,
                  path.string() + " contains label index " + std::to_string(v) +
                      " at pixel (" + std::to_string(i / raw.width) + ", " +
                      std::to_string(i % raw.width) + ")");
    }
  }
  return LabelMap(static_cast<int>(raw.height), static_cast<int>(raw.width),
                  std::move(data));
}

void WriteLabelPng(const LabelMap& labels, const fs::path& path) {
  std::vector<png_byte> colormap;
  colormap.reserve(256 * 3);
  for (const auto& c : VocPalette()) colormap.insert(colormap.end(), c.begin(), c.end());
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(labels.width);
  image.height = static_cast<png_uint_32>(labels.height);
  image.format = PNG_FORMAT_RGB_COLORMAP;
  image.colormap_entries = 256;
  WritePngImage(path, &image, labels.data.data(), colormap.data());
}

SaliencyMap ReadSaliencyPng(const fs::path& path) {
  OpenForRead(path);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + image.message);
  }
  constexpr png_uint_32 kNotGray = PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA |
                                   PNG_FORMAT_FLAG_COLORMAP | PNG_FORMAT_FLAG_LINEAR;
  if ((image.format & kNotGray) != 0) {
    png_image_free(&image);
    throw Error(ErrorCode::kFormat,
                path.string() + " is not an 8-bit single-channel PNG");
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> gray(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, gray.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kFormat, path.string() + ": " + msg);
  }
  std::vector<float> data(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    data[i] = static_cast<float>(gray[i] / 255.0);
  }
  return SaliencyMap(static_cast<int>(image.height), static_cast<int>(image.width),
                     std::move(data));
}

void WriteGrayPng(const fs::path& path, int height, int width,
                  const std::vector<std::uint8_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorCode::kDimension, "gray buffer size mismatch");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_GRAY;
  WritePngImage(path, &image, gray.data(), nullptr);
}

}  // namespace camrefine::dataio
