#include <png.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadvec/raster.hpp"

namespace roadvec::raster {

namespace {

std::string lower_ext(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---- PNM (P5 grayscale / P6 RGB) ----

int pnm_read_token(std::istream& in) {
  // Skips whitespace and '#' comments, then reads one unsigned integer.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  if (!in || value < 0) throw parse_error("malformed PNM header");
  return value;
}

void read_pnm(const std::string& path, int channels_expected, int& w, int& h,
              std::vector<uint8_t>& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char p, kind;
  in.get(p);
  in.get(kind);
  const char want = channels_expected == 1 ? '5' : '6';
  if (p != 'P' || kind != want)
    throw parse_error(path + ": expected P" + std::string(1, want) + " PNM");
  w = pnm_read_token(in);
  h = pnm_read_token(in);
  const int maxval = pnm_read_token(in);
  if (maxval != 255) throw parse_error(path + ": only 8-bit PNM supported");
  in.get();  // single whitespace byte after maxval
  data.resize(size_t(w) * h * channels_expected);
  in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
  if (in.gcount() != std::streamsize(data.size()))
    throw parse_error(path + ": truncated PNM pixel data");
}

void write_pnm(const std::string& path, int channels, int w, int h,
               const std::vector<uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << (channels == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(data.data()),
            std::streamsize(data.size()));
  if (!out) throw io_error("write failed: " + path);
}

// ---- PNG ----

struct PngCloser {
  FILE* f = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  bool reading = false;
  ~PngCloser() {
    if (png) {
      if (reading)
        png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
      else
        png_destroy_write_struct(&png, info ? &info : nullptr);
    }
    if (f) std::fclose(f);
  }
};

// Reads any supported PNG into 16-bit band-interleaved rows.
void read_png(const std::string& path, int& w, int& h, int& channels,
              int& bit_depth, std::vector<uint16_t>& interleaved) {
  PngCloser c;
  c.reading = true;
  c.f = std::fopen(path.c_str(), "rb");
  if (!c.f) throw io_error("cannot open " + path);
  c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  c.info = png_create_info_struct(c.png);
  if (!c.png || !c.info) throw io_error("libpng init failed");
  if (setjmp(png_jmpbuf(c.png))) throw parse_error(path + ": PNG decode error");

  png_init_io(c.png, c.f);
  png_read_info(c.png, c.info);
  w = int(png_get_image_width(c.png, c.info));
  h = int(png_get_image_height(c.png, c.info));
  bit_depth = png_get_bit_depth(c.png, c.info);
  const int color = png_get_color_type(c.png, c.info);

  if (color == PNG_COLOR_TYPE_PALETTE)
    throw parse_error(path + ": palette PNG not supported");
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(c.png);
  if (bit_depth == 16) png_set_swap(c.png);  // stored big-endian
  png_read_update_info(c.png, c.info);
  channels = png_get_channels(c.png, c.info);
  bit_depth = png_get_bit_depth(c.png, c.info);

  const size_t stride = size_t(w) * channels;
  interleaved.resize(stride * h);
  std::vector<uint8_t> row8;
  if (bit_depth == 8) row8.resize(stride);
  std::vector<png_bytep> rows(h);
  std::vector<std::vector<uint8_t>> raw(h);
  const size_t row_bytes = png_get_rowbytes(c.png, c.info);
  for (int r = 0; r < h; ++r) {
    raw[r].resize(row_bytes);
    rows[r] = raw[r].data();
  }
  png_read_image(c.png, rows.data());
  png_read_end(c.png, nullptr);

  for (int r = 0; r < h; ++r) {
    if (bit_depth == 8) {
      for (size_t i = 0; i < stride; ++i)
        interleaved[size_t(r) * stride + i] = raw[r][i];
    } else {
      const uint16_t* src = reinterpret_cast<const uint16_t*>(raw[r].data());
      for (size_t i = 0; i < stride; ++i)
        interleaved[size_t(r) * stride + i] = src[i];
    }
  }
}

void write_png(const std::string& path, int w, int h, int channels,
               int bit_depth, const std::vector<uint16_t>& interleaved) {
  PngCloser c;
  c.f = std::fopen(path.c_str(), "wb");
  if (!c.f) throw io_error("cannot open " + path + " for writing");
  c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  c.info = png_create_info_struct(c.png);
  if (!c.png || !c.info) throw io_error("libpng init failed");
  if (setjmp(png_jmpbuf(c.png))) throw io_error(path + ": PNG encode error");

  int color = PNG_COLOR_TYPE_GRAY;
  if (channels == 3) color = PNG_COLOR_TYPE_RGB;
  if (channels == 4) color = PNG_COLOR_TYPE_RGBA;
  png_init_io(c.png, c.f);
  png_set_IHDR(c.png, c.info, w, h, bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(c.png, c.info);
  if (bit_depth == 16) png_set_swap(c.png);

  const size_t stride = size_t(w) * channels;
  if (bit_depth == 8) {
    std::vector<uint8_t> row(stride);
    for (int r = 0; r < h; ++r) {
      for (size_t i = 0; i < stride; ++i)
        row[i] = static_cast<uint8_t>(interleaved[size_t(r) * stride + i]);
      png_write_row(c.png, row.data());
    }
  } else {
    std::vector<uint16_t> row(stride);
    for (int r = 0; r < h; ++r) {
      std::copy_n(&interleaved[size_t(r) * stride], stride, row.data());
      png_write_row(c.png, reinterpret_cast<png_bytep>(row.data()));
    }
  }
  png_write_end(c.png, nullptr);
}

std::vector<uint8_t> read_gray8(const std::string& path, int& w, int& h) {
  const std::string ext = lower_ext(path);
  if (ext == "pgm") {
    std::vector<uint8_t> data;
    read_pnm(path, 1, w, h, data);
    return data;
  }
  if (ext == "png") {
    int channels = 0, depth = 0;
    std::vector<uint16_t> inter;
    read_png(path, w, h, channels, depth, inter);
    if (channels != 1 || depth != 8)
      throw parse_error(path + ": expected single-band 8-bit pixels");
    return std::vector<uint8_t>(inter.begin(), inter.end());
  }
  throw io_error(path + ": unsupported pixel file extension ." + ext);
}

void write_gray8(const std::string& path, int w, int h,
                 const std::vector<uint8_t>& data) {
  const std::string ext = lower_ext(path);
  if (ext == "pgm") {
    write_pnm(path, 1, w, h, data);
  } else if (ext == "png") {
    std::vector<uint16_t> inter(data.begin(), data.end());
    write_png(path, w, h, 1, 8, inter);
  } else {
    throw io_error(path + ": unsupported pixel file extension ." + ext);
  }
}

}  // namespace

GeoTransform load_worldfile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    double v = 0.0;
    const char* first = line.data();
    while (*first == ' ' || *first == '\t') ++first;
    auto [ptr, ec] = std::from_chars(first, line.data() + line.size(), v);
    if (ec != std::errc())
      throw parse_error(path + ": bad number in world file: '" + line + "'");
    vals.push_back(v);
  }
  if (vals.size() != 6)
    throw parse_error(path + ": world file must have 6 lines, got " +
                      std::to_string(vals.size()));
  GeoTransform t;
  t.pixel_width = vals[0];
  t.skew_y = vals[1];
  t.skew_x = vals[2];
  t.pixel_height = vals[3];
  t.origin_x = vals[4];
  t.origin_y = vals[5];
  validate(t);
  return t;
}

void write_worldfile(const GeoTransform& t, const std::string& path) {
  validate(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << format_double(t.pixel_width) << "\n"
      << format_double(t.skew_y) << "\n"
      << format_double(t.skew_x) << "\n"
      << format_double(t.pixel_height) << "\n"
      << format_double(t.origin_x) << "\n"
      << format_double(t.origin_y) << "\n";
  if (!out) throw io_error("write failed: " + path);
}

RasterMask load_mask(const std::string& pixel_path,
                     const std::string& worldfile_path) {
  RasterMask m;
  m.classes = read_gray8(pixel_path, m.width, m.height);
  for (size_t i = 0; i < m.classes.size(); ++i)
    if (m.classes[i] > 2)
      throw parse_error(pixel_path + ": mask label out of range at pixel " +
                        std::to_string(i) + ": " + std::to_string(m.classes[i]));
  m.transform = load_worldfile(worldfile_path);
  return m;
}

void write_mask(const RasterMask& mask, const std::string& pixel_path,
                const std::string& worldfile_path) {
  write_gray8(pixel_path, mask.width, mask.height, mask.classes);
  write_worldfile(mask.transform, worldfile_path);
}

ImageRaster load_image(const std::string& pixel_path,
                       const std::string& worldfile_path) {
  ImageRaster img;
  const std::string ext = lower_ext(pixel_path);
  std::vector<uint16_t> inter;
  int channels = 0;
  if (ext == "ppm") {
    std::vector<uint8_t> data;
    read_pnm(pixel_path, 3, img.width, img.height, data);
    channels = 3;
    img.bit_depth = 8;
    inter.assign(data.begin(), data.end());
  } else if (ext == "png") {
    read_png(pixel_path, img.width, img.height, channels, img.bit_depth, inter);
  } else {
    throw io_error(pixel_path + ": unsupported pixel file extension ." + ext);
  }
  if (channels != 3 && channels != 4)
    throw parse_error(pixel_path + ": imagery must have 3 or 4 bands, got " +
                      std::to_string(channels));
  img.bands.assign(channels, std::vector<uint16_t>(size_t(img.width) * img.height));
  for (size_t px = 0; px < size_t(img.width) * img.height; ++px)
    for (int b = 0; b < channels; ++b)
      img.bands[b][px] = inter[px * channels + b];
  img.transform = load_worldfile(worldfile_path);
  return img;
}

void write_image(const ImageRaster& img, const std::string& pixel_path,
                 const std::string& worldfile_path) {
  const int channels = img.band_count();
  if (channels != 3 && channels != 4)
    throw param_error("imagery must have 3 or 4 bands");
  const size_t npx = size_t(img.width) * img.height;
  std::vector<uint16_t> inter(npx * channels);
  for (size_t px = 0; px < npx; ++px)
    for (int b = 0; b < channels; ++b)
      inter[px * channels + b] = img.bands[b][px];

  const std::string ext = lower_ext(pixel_path);
  if (ext == "ppm") {
    if (channels != 3 || img.bit_depth != 8)
      throw io_error("PPM output requires 3 bands at 8 bits; use PNG");
    std::vector<uint8_t> data(inter.begin(), inter.end());
    write_pnm(pixel_path, 3, img.width, img.height, data);
  } else if (ext == "png") {
    write_png(pixel_path, img.width, img.height, channels, img.bit_depth, inter);
  } else {
    throw io_error(pixel_path + ": unsupported pixel file extension ." + ext);
  }
  write_worldfile(img.transform, worldfile_path);
}

LulcRaster load_lulc(const std::string& pixel_path,
                     const std::string& worldfile_path,
                     const std::string& legend_path) {
  LulcRaster l;
  l.labels = read_gray8(pixel_path, l.width, l.height);
  l.transform = load_worldfile(worldfile_path);

  std::ifstream in(legend_path);
  if (!in) throw io_error("cannot open " + legend_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(legend_path + ": " + e.what());
  }
  if (!j.is_object()) throw parse_error(legend_path + ": legend must be an object");
  for (const auto& [key, value] : j.items()) {
    int id = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
    if (ec != std::errc() || ptr != key.data() + key.size())
      throw parse_error(legend_path + ": non-integer label id '" + key + "'");
    if (!value.is_string())
      throw parse_error(legend_path + ": class name for id " + key +
                        " must be a string");
    l.legend[id] = value.get<std::string>();
  }
  bool barren = false, water = false;
  for (const auto& [id, name] : l.legend) {
    barren |= name == "barren";
    water |= name == "water";
  }
  if (!barren || !water)
    throw parse_error(legend_path + ": legend must mark 'barren' and 'water' ids");
  return l;
}

void write_lulc(const LulcRaster& lulc, const std::string& pixel_path,
                const std::string& worldfile_path,
                const std::string& legend_path) {
  write_gray8(pixel_path, lulc.width, lulc.height, lulc.labels);
  write_worldfile(lulc.transform, worldfile_path);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, name] : lulc.legend) j[std::to_string(id)] = name;
  std::ofstream out(legend_path, std::ios::binary);
  if (!out) throw io_error("cannot open " + legend_path + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace roadvec::raster
