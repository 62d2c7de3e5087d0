#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "novelty/error.hpp"
#include "novelty/imgfeat.hpp"

namespace novelty::img {
namespace {

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ValidationError(std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ValidationError("PNG decode failed: " + msg);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height),
                     std::move(pixels));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Kept free of non-trivially-destructible locals: longjmp skips destructors.
bool decode_jpeg_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& out,
                     int& width, int& height, JpegErrorManager& err) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  out.resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;
  JpegErrorManager err{};
  if (!decode_jpeg_raw(bytes, pixels, width, height, err)) {
    throw ValidationError(std::string("JPEG decode failed: ") + err.message);
  }
  return RasterImage(width, height, std::move(pixels));
}

class GifReader {
 public:
  explicit GifReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  RasterImage decode() {
    skip(6);  // GIF87a / GIF89a
    const int screen_w = u16();
    const int screen_h = u16();
    const std::uint8_t packed = u8();
    const std::uint8_t background = u8();
    skip(1);
    std::vector<std::uint8_t> global_table;
    if (packed & 0x80) global_table = color_table(2 << (packed & 0x07));

    std::optional<std::uint8_t> transparent;
    for (;;) {
      const std::uint8_t block = u8();
      if (block == 0x21) {
        const std::uint8_t label = u8();
        if (label == 0xF9) {
          const std::uint8_t size = u8();
          if (size < 4) fail("bad graphic control extension");
          const std::uint8_t flags = u8();
          skip(2);
          const std::uint8_t index = u8();
          if (flags & 0x01) transparent = index;
          skip(size - 4);
        }
        skip_sub_blocks();
      } else if (block == 0x2C) {
        return decode_frame(screen_w, screen_h, background, global_table, transparent);
      } else {
        fail("no image frame");
      }
    }
  }

 private:
  [[noreturn]] void fail(const char* what) {
    throw ValidationError(std::string("GIF decode failed: ") + what);
  }
  std::uint8_t u8() {
    if (pos_ >= bytes_.size()) fail("truncated stream");
    return bytes_[pos_++];
  }
  int u16() {
    const int lo = u8();
    return lo | (u8() << 8);
  }
  void skip(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail("truncated stream");
    pos_ += n;
  }
  void skip_sub_blocks() {
    for (std::uint8_t size = u8(); size != 0; size = u8()) skip(size);
  }
  std::vector<std::uint8_t> color_table(int entries) {
    std::vector<std::uint8_t> table(static_cast<std::size_t>(entries) * 3);
    for (auto& v : table) v = u8();
    return table;
  }

  std::vector<std::uint8_t> lzw_decode(int min_code_size, std::size_t pixel_count) {
    if (min_code_size < 2 || min_code_size > 8) fail("bad LZW code size");
    std::vector<std::uint8_t> data;
    for (std::uint8_t size = u8(); size != 0; size = u8()) {
      if (pos_ + size > bytes_.size()) fail("truncated stream");
      data.insert(data.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + size));
      pos_ += size;
    }

    const int clear = 1 << min_code_size;
    const int end_code = clear + 1;
    std::vector<int> prefix(4096, -1);
    std::vector<std::uint8_t> suffix(4096, 0);
    std::vector<std::uint8_t> first(4096, 0);
    for (int i = 0; i < clear; ++i) {
      suffix[i] = static_cast<std::uint8_t>(i);
      first[i] = static_cast<std::uint8_t>(i);
    }
    int code_size = min_code_size + 1;
    int next = clear + 2;
    int previous = -1;
    std::vector<std::uint8_t> out;
    out.reserve(pixel_count);
    std::vector<std::uint8_t> stack;

    std::size_t bit = 0;
    const std::size_t total_bits = data.size() * 8;
    while (bit + static_cast<std::size_t>(code_size) <= total_bits &&
           out.size() < pixel_count) {
      int code = 0;
      for (int k = 0; k < code_size; ++k, ++bit) {
        if (data[bit >> 3] & (1u << (bit & 7))) code |= 1 << k;
      }
      if (code == clear) {
        code_size = min_code_size + 1;
        next = clear + 2;
        previous = -1;
        continue;
      }
      if (code == end_code) break;

      int current = code;
      stack.clear();
      if (code >= next) {
        if (previous < 0 || code > next) fail("corrupt LZW stream");
        stack.push_back(first[previous]);
        current = previous;
      }
      while (current >= clear) {
        stack.push_back(suffix[current]);
        current = prefix[current];
      }
      stack.push_back(static_cast<std::uint8_t>(current));
      out.insert(out.end(), stack.rbegin(), stack.rend());

      if (previous >= 0 && next < 4096) {
        prefix[next] = previous;
        suffix[next] = stack.back();
        first[next] = first[previous];
        ++next;
        if (next == (1 << code_size) && code_size < 12) ++code_size;
      }
      previous = code;
    }
    out.resize(pixel_count, 0);
    return out;
  }

  RasterImage decode_frame(int screen_w, int screen_h, std::uint8_t background,
                           const std::vector<std::uint8_t>& global_table,
                           std::optional<std::uint8_t> transparent) {
    const int left = u16();
    const int top = u16();
    const int w = u16();
    const int h = u16();
    const std::uint8_t packed = u8();
    std::vector<std::uint8_t> table = global_table;
    if (packed & 0x80) table = color_table(2 << (packed & 0x07));
    if (table.empty()) fail("no color table");
    const bool interlaced = packed & 0x40;
    if (screen_w <= 0 || screen_h <= 0) {
      screen_w = left + w;
      screen_h = top + h;
    }
    if (w <= 0 || h <= 0) fail("empty frame");

    const int min_code_size = u8();
    const auto indices = lzw_decode(min_code_size, static_cast<std::size_t>(w) * h);

    std::vector<std::uint8_t> px(static_cast<std::size_t>(screen_w) * screen_h * 3, 0);
    if (!global_table.empty() && static_cast<std::size_t>(background) * 3 + 2 < global_table.size()) {
      for (std::size_t i = 0; i < px.size(); i += 3) {
        px[i] = global_table[background * 3u];
        px[i + 1] = global_table[background * 3u + 1];
        px[i + 2] = global_table[background * 3u + 2];
      }
    }

    std::vector<int> row_order(h);
    if (interlaced) {
      int k = 0;
      for (int start : {0, 4, 2, 1}) {
        const int step = start == 0 ? 8 : (start == 4 ? 8 : (start == 2 ? 4 : 2));
        for (int r = start; r < h; r += step) row_order[k++] = r;
      }
    } else {
      for (int r = 0; r < h; ++r) row_order[r] = r;
    }

    for (int i = 0; i < h; ++i) {
      const int y = top + row_order[i];
      if (y >= screen_h) continue;
      for (int x = 0; x < w; ++x) {
        const int cx = left + x;
        if (cx >= screen_w) continue;
        const std::uint8_t index = indices[static_cast<std::size_t>(i) * w + x];
        if (transparent && index == *transparent) continue;
        const std::size_t t = static_cast<std::size_t>(index) * 3;
        if (t + 2 >= table.size()) continue;
        const std::size_t dst = (static_cast<std::size_t>(y) * screen_w + cx) * 3;
        px[dst] = table[t];
        px[dst + 1] = table[t + 1];
        px[dst + 2] = table[t + 2];
      }
    }
    return RasterImage(screen_w, screen_h, std::move(px));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool starts_with(std::span<const std::uint8_t> bytes, std::initializer_list<std::uint8_t> sig) {
  if (bytes.size() < sig.size()) return false;
  return std::equal(sig.begin(), sig.end(), bytes.begin());
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (starts_with(bytes, {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A})) {
    return decode_png(bytes);
  }
  if (starts_with(bytes, {0xFF, 0xD8, 0xFF})) return decode_jpeg(bytes);
  if (starts_with(bytes, {'G', 'I', 'F', '8'})) return GifReader(bytes).decode();
  throw ValidationError("unrecognized image format");
}

RasterImage decode_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  try {
    return decode_image(std::span<const std::uint8_t>(bytes));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace novelty::img
