#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace epd {

// H x W x 3 RGB image, interleaved row-major, components nominally in [0, 1].
class ImageBuf {
 public:
  static constexpr int kChannels = 3;

  ImageBuf() = default;
  ImageBuf(int height, int width, float fill = 0.0f);
  ImageBuf(int height, int width, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const ImageBuf& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  void clamp01() noexcept;

  friend bool operator==(const ImageBuf&, const ImageBuf&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// 8-bit RGB PNG. Reading maps v -> v / 255; writing rounds v * 255 half away
// from zero after clamping to [0, 1]. Alpha and 16-bit inputs are converted.
ImageBuf read_png(const std::filesystem::path& path);
void write_png(const ImageBuf& image, const std::filesystem::path& path);

// The 8-bit quantization write_png applies, exposed so callers can reproduce
// exactly what a round trip through disk yields.
ImageBuf quantize_8bit(const ImageBuf& image);

}  // namespace epd
