#include "pausepoint/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "pausepoint/blob_ref.hpp"
#include "pausepoint/error.hpp"

namespace pausepoint {

Image::Image(Size size, Rgba fill)
    : size_(size), pixels_(static_cast<std::size_t>(size.w) * static_cast<std::size_t>(size.h), fill) {}

Rgba blend_over(Rgba dst, Rgba src) noexcept {
  if (src.a == 255) return src;
  if (src.a == 0) return dst;
  const unsigned sa = src.a;
  const unsigned inv = 255 - sa;
  const unsigned out_a = sa + (dst.a * inv + 127) / 255;
  if (out_a == 0) return kTransparent;
  // Straight-alpha source-over: channel = (src*sa + dst*da*(1-sa)) / out_a.
  auto mix = [&](unsigned s, unsigned d) {
    const unsigned num = s * sa * 255 + d * dst.a * inv;
    return static_cast<std::uint8_t>((num + out_a * 255 / 2) / (out_a * 255));
  };
  return Rgba{mix(src.r, dst.r), mix(src.g, dst.g), mix(src.b, dst.b), static_cast<std::uint8_t>(out_a)};
}

Image scale_nearest(const Image& src, Size size) {
  if (src.size() == size) return src;
  Image out(size, kTransparent);
  if (src.empty()) return out;
  for (int y = 0; y < size.h; ++y) {
    const int sy = static_cast<int>(static_cast<std::int64_t>(y) * src.height() / size.h);
    for (int x = 0; x < size.w; ++x) {
      const int sx = static_cast<int>(static_cast<std::int64_t>(x) * src.width() / size.w);
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

namespace {

void png_write_to_string(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

Image decode_png(std::string_view bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(Errc::artifact_unreadable, "png header unreadable");
  }
  img.format = PNG_FORMAT_RGBA;
  if (img.width == 0 || img.height == 0 || img.width > 16384 || img.height > 16384) {
    png_image_free(&img);
    throw Error(Errc::artifact_unreadable, "png dimensions out of range");
  }
  Image out(Size{static_cast<int>(img.width), static_cast<int>(img.height)}, kTransparent);
  if (!png_image_finish_read(&img, nullptr, const_cast<Rgba*>(out.pixels().data()), 0, nullptr)) {
    png_image_free(&img);
    throw Error(Errc::artifact_unreadable, "png data unreadable");
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(std::string_view bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.output_message = [](j_common_ptr) {};
  std::vector<std::uint8_t> row;
  // Locals touched after setjmp stay trivially destructible or are declared before it.
  Image out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::artifact_unreadable, "jpeg data unreadable");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  if (cinfo.output_width == 0 || cinfo.output_height == 0 || cinfo.output_width > 16384 ||
      cinfo.output_height > 16384 || cinfo.output_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::artifact_unreadable, "jpeg dimensions out of range");
  }
  out = Image(Size{static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height)}, kWhite);
  row.resize(static_cast<std::size_t>(cinfo.output_width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW ptr = row.data();
    const int y = static_cast<int>(cinfo.output_scanline);
    jpeg_read_scanlines(&cinfo, &ptr, 1);
    for (int x = 0; x < out.width(); ++x) {
      out.at(x, y) = Rgba{row[x * 3], row[x * 3 + 1], row[x * 3 + 2], 255};
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

std::string encode_png(const Image& image) {
  if (image.empty()) throw Error(Errc::io_error, "cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io_error, "png encoder init failed");
  }
  std::string out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io_error, "png encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    rows[y] = reinterpret_cast<png_bytep>(const_cast<Rgba*>(&image.at(0, y)));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_image(std::string_view bytes) {
  switch (sniff_image(bytes).value_or(MediaType::video)) {
    case MediaType::png: return decode_png(bytes);
    case MediaType::jpeg: return decode_jpeg(bytes);
    default: throw Error(Errc::artifact_unreadable, "not a PNG or JPEG image");
  }
}

}  // namespace pausepoint
