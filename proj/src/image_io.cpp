#include "remn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace remn::io {

namespace fs = std::filesystem;

namespace {

struct PnmImage {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> pixels;
};

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  while (true) {
    const int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

Index parse_extent(const std::string& token, const fs::path& path) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used == token.size() && v > 0) return static_cast<Index>(v);
  } catch (const std::exception&) {
  }
  throw ArgumentError(path.string() + ": bad header field '" + token + "'");
}

PnmImage read_pnm(const fs::path& path, const char* magic, Index channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  if (next_token(in) != magic) throw ArgumentError(path.string() + ": expected " + magic + " image");
  PnmImage img;
  img.width = parse_extent(next_token(in), path);
  img.height = parse_extent(next_token(in), path);
  if (parse_extent(next_token(in), path) != 255) throw ArgumentError(path.string() + ": only maxval 255 supported");
  img.pixels.resize(static_cast<std::size_t>(img.width * img.height * channels));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ArgumentError(path.string() + ": truncated pixel data");
  }
  return img;
}

void write_pnm(const fs::path& path, const char* magic, Index width, Index height, const std::uint8_t* data,
               std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << magic << "\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw ArgumentError("write failed for " + path.string());
}

}  // namespace

void write_ppm(const fs::path& path, const Frame& frame) {
  write_pnm(path, "P6", frame.width, frame.height, frame.rgb.data(), frame.rgb.size());
}

Frame read_ppm(const fs::path& path) {
  PnmImage img = read_pnm(path, "P6", 3);
  Frame frame;
  frame.height = img.height;
  frame.width = img.width;
  frame.rgb = std::move(img.pixels);
  return frame;
}

void write_pgm(const fs::path& path, const LabelMask& mask) {
  write_pnm(path, "P5", mask.cols(), mask.rows(), mask.data(), static_cast<std::size_t>(mask.size()));
}

LabelMask read_pgm(const fs::path& path) {
  const PnmImage img = read_pnm(path, "P5", 1);
  LabelMask mask(img.height, img.width);
  std::copy(img.pixels.begin(), img.pixels.end(), mask.data());
  return mask;
}

std::string numbered_name(std::size_t index, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return std::string(buf) + "." + extension;
}

std::vector<fs::path> list_numbered(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw ArgumentError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == "." + extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_frames(const fs::path& dir, const std::vector<Frame>& frames) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) write_ppm(dir / numbered_name(i, "ppm"), frames[i]);
}

void write_masks(const fs::path& dir, const std::vector<LabelMask>& masks) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < masks.size(); ++i) write_pgm(dir / numbered_name(i, "pgm"), masks[i]);
}

std::vector<Frame> read_frames(const fs::path& dir) {
  std::vector<Frame> frames;
  for (const auto& p : list_numbered(dir, "ppm")) frames.push_back(read_ppm(p));
  return frames;
}

std::vector<LabelMask> read_masks(const fs::path& dir) {
  std::vector<LabelMask> masks;
  for (const auto& p : list_numbered(dir, "pgm")) masks.push_back(read_pgm(p));
  return masks;
}

}  // namespace remn::io
