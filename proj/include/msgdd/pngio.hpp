#ifndef MSGDD_PNGIO_HPP
#define MSGDD_PNGIO_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace msgdd {

// 8-bit raster, rows top-down, channels interleaved.
struct RawImage {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;
};

// Reads any PNG as 8-bit grayscale (color images are reduced to luma).
RawImage read_png_gray(const std::string& path);

void write_png_gray(const std::string& path, int height, int width, const std::uint8_t* data);
void write_png_rgb(const std::string& path, int height, int width, const std::uint8_t* data);

} // namespace msgdd

#endif
