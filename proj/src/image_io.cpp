#include "ascsw/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ascsw/error.hpp"

namespace ascsw {

namespace fs = std::filesystem;

namespace {

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

int read_header_int(std::istream& in, const fs::path& path) {
  // Skip whitespace and '#' comments.
  for (;;) {
    int c = in.peek();
    if (c == EOF) throw IoError(path.string() + ": truncated PGM header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value) || value < 0) throw IoError(path.string() + ": malformed PGM header");
  return value;
}

PgmHeader read_header(std::istream& in, const fs::path& path) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw IoError(path.string() + ": not a binary PGM (P5)");
  PgmHeader h;
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  h.maxval = read_header_int(in, path);
  if (h.maxval < 1 || h.maxval > 65535) throw IoError(path.string() + ": PGM maxval out of range");
  // Exactly one whitespace byte separates the header from the raster.
  if (!std::isspace(in.get())) throw IoError(path.string() + ": malformed PGM header");
  return h;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Gray8 read_pgm8(const fs::path& path) {
  auto in = open_in(path);
  const PgmHeader h = read_header(in, path);
  if (h.maxval > 255) throw IoError(path.string() + ": expected 8-bit PGM, maxval " + std::to_string(h.maxval));
  Gray8 img{h.width, h.height, std::vector<std::uint8_t>(static_cast<std::size_t>(h.width) * h.height)};
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw IoError(path.string() + ": truncated raster");
  return img;
}

Gray16 read_pgm16(const fs::path& path) {
  auto in = open_in(path);
  const PgmHeader h = read_header(in, path);
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  Gray16 img{h.width, h.height, std::vector<std::uint16_t>(n)};
  if (h.maxval <= 255) {
    std::vector<std::uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError(path.string() + ": truncated raster");
    std::copy(raw.begin(), raw.end(), img.pixels.begin());
    return img;
  }
  // 16-bit PGM samples are big-endian.
  std::vector<std::uint8_t> raw(2 * n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw IoError(path.string() + ": truncated raster");
  for (std::size_t i = 0; i < n; ++i) {
    img.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return img;
}

void write_pgm8(const fs::path& path, const Gray8& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_pgm16(const fs::path& path, const Gray16& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  std::vector<std::uint8_t> raw(2 * image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    raw[2 * i] = static_cast<std::uint8_t>(image.pixels[i] >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(image.pixels[i] & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

BinaryMask mask_from_gray(const Gray8& image) {
  BinaryMask mask(image.width, image.height);
  auto dst = mask.data();
  std::transform(image.pixels.begin(), image.pixels.end(), dst.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v >= 128 ? 1 : 0; });
  return mask;
}

Gray8 mask_to_gray(const BinaryMask& mask) {
  Gray8 img{mask.width(), mask.height(), std::vector<std::uint8_t>(mask.size())};
  const auto src = mask.data();
  std::transform(src.begin(), src.end(), img.pixels.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  return img;
}

BinaryMask read_mask(const fs::path& path) { return mask_from_gray(read_pgm8(path)); }

void write_mask(const fs::path& path, const BinaryMask& mask) { write_pgm8(path, mask_to_gray(mask)); }

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

namespace {

std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

// Upper bound on a single frame, guards against garbage headers.
constexpr std::uint64_t kMaxStreamPixels = std::uint64_t{1} << 28;

}  // namespace

std::optional<BinaryMask> read_stream_frame(std::istream& in) {
  std::array<unsigned char, 8> header{};
  in.read(reinterpret_cast<char*>(header.data()), 8);
  if (in.gcount() == 0) return std::nullopt;
  if (in.gcount() != 8) throw IoError("stream: truncated frame header");
  const std::uint32_t w = load_u32_le(header.data());
  const std::uint32_t h = load_u32_le(header.data() + 4);
  const std::uint64_t n = static_cast<std::uint64_t>(w) * h;
  if (n == 0 || n > kMaxStreamPixels) throw IoError("stream: implausible frame size " + std::to_string(w) + "x" + std::to_string(h));
  Gray8 img{static_cast<int>(w), static_cast<int>(h), std::vector<std::uint8_t>(n)};
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::uint64_t>(in.gcount()) != n) throw IoError("stream: truncated frame raster");
  return mask_from_gray(img);
}

void write_stream_frame(std::ostream& out, const BinaryMask& mask) {
  std::array<unsigned char, 8> header{};
  store_u32_le(header.data(), static_cast<std::uint32_t>(mask.width()));
  store_u32_le(header.data() + 4, static_cast<std::uint32_t>(mask.height()));
  out.write(reinterpret_cast<const char*>(header.data()), 8);
  const Gray8 img = mask_to_gray(mask);
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("stream: write failed");
}

}  // namespace ascsw
