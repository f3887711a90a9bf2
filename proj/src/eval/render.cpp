#include "tabnet/eval/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "tabnet/error.hpp"

namespace tabnet::eval {
namespace {

bool is_contour(const HardLabelMap& m, int r, int c) {
  const int v = m(r, c);
  if (v == 0) return false;
  constexpr int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
  for (int d = 0; d < 4; ++d) {
    const int rr = r + dr[d], cc = c + dc[d];
    if (rr < 0 || cc < 0 || rr >= m.height() || cc >= m.width()) return true;
    if (m(rr, cc) != v) return true;
  }
  return false;
}

void write_png(const std::string& path, int width, int height, bool color,
               const std::vector<unsigned char>& pixels) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (fp == nullptr) throw Error("cannot open " + path + " for writing");
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(fp, std::fclose);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed writing " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, color ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * (color ? 3 : 1);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + r * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp) != 0) throw Error("failed writing " + path);
}

}  // namespace

Rgb palette(int label) {
  static constexpr Rgb colours[] = {{230, 60, 60}, {60, 200, 80}, {70, 120, 240}};
  return colours[(label - 1) % 3];
}

void render_overlay(const Image& image, const HardLabelMap& pred, const std::optional<HardLabelMap>& gt,
                    const std::string& out_path) {
  const int h = image.height(), w = image.width();
  if (pred.height() != h || pred.width() != w || (gt && (gt->height() != h || gt->width() != w)))
    throw ShapeMismatch("render_overlay: image and label maps must be aligned");
  const auto v = image.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const float lo = v.empty() ? 0.0f : *lo_it, hi = v.empty() ? 0.0f : *hi_it;
  auto gray = [&](int r, int c) {
    if (hi <= lo) return static_cast<unsigned char>(0);
    return static_cast<unsigned char>(std::lround(255.0 * (image(r, c) - lo) / (hi - lo)));
  };

  std::vector<const HardLabelMap*> panels{&pred};
  if (gt) panels.push_back(&*gt);
  const int width = w * static_cast<int>(panels.size());
  bool any = false;
  for (const auto* m : panels)
    for (int r = 0; r < h && !any; ++r)
      for (int c = 0; c < w && !any; ++c) any = is_contour(*m, r, c);

  const int channels = any ? 3 : 1;
  std::vector<unsigned char> px(static_cast<std::size_t>(width) * h * channels);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t o = (static_cast<std::size_t>(r) * width + p * w + c) * channels;
        const unsigned char g = gray(r, c);
        if (!any) {
          px[o] = g;
          continue;
        }
        Rgb col{g, g, g};
        if (is_contour(*panels[p], r, c)) col = palette((*panels[p])(r, c));
        px[o] = col.r;
        px[o + 1] = col.g;
        px[o + 2] = col.b;
      }
    }
  }
  write_png(out_path, width, h, any, px);
}

}  // namespace tabnet::eval
