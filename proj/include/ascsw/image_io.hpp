#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ascsw/mask_ops.hpp"

namespace ascsw {

/// Raw 8-bit grayscale image.
struct Gray8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Raw 16-bit image (e.g. depth in millimetres).
struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

// Binary PGM (P5). Comments in the header are skipped.
Gray8 read_pgm8(const std::filesystem::path& path);
Gray16 read_pgm16(const std::filesystem::path& path);
void write_pgm8(const std::filesystem::path& path, const Gray8& image);
void write_pgm16(const std::filesystem::path& path, const Gray16& image);

/// Any value >= 128 is foreground.
BinaryMask mask_from_gray(const Gray8& image);
/// Foreground -> 255, background -> 0.
Gray8 mask_to_gray(const BinaryMask& mask);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// Regular files in `dir` with extension `ext`, sorted lexicographically by
/// filename.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext = ".pgm");

// Length-prefixed frame stream: width u32 LE, height u32 LE, then
// width*height bytes (>= 128 = foreground). A clean EOF before a header
// ends the stream; a truncated frame is an IoError.
std::optional<BinaryMask> read_stream_frame(std::istream& in);
void write_stream_frame(std::ostream& out, const BinaryMask& mask);

}  // namespace ascsw
