#pragma once

#include <string>
#include <vector>

#include "hopman/image.hpp"

namespace hopman {

Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

// In-memory PNG encode; used for checksumming and byte-stability tests.
std::vector<u8> encode_png(const Image& img);

u32 crc32_bytes(const void* data, size_t n, u32 seed = 0);
u32 crc32_file(const std::string& path);

}  // namespace hopman
