#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "remn/masks.hpp"
#include "remn/pipeline.hpp"

// Binary PPM (P6) frames and PGM (P5) label masks, 8-bit only.

namespace remn::io {

void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const LabelMask& mask);
LabelMask read_pgm(const std::filesystem::path& path);

/// "000042.ppm" style names.
std::string numbered_name(std::size_t index, const std::string& extension);

/// Files in `dir` with the given extension, sorted by name.
std::vector<std::filesystem::path> list_numbered(const std::filesystem::path& dir, const std::string& extension);

void write_frames(const std::filesystem::path& dir, const std::vector<Frame>& frames);
void write_masks(const std::filesystem::path& dir, const std::vector<LabelMask>& masks);
std::vector<Frame> read_frames(const std::filesystem::path& dir);
std::vector<LabelMask> read_masks(const std::filesystem::path& dir);

}  // namespace remn::io
