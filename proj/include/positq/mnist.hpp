#pragma once

// MNIST in IDX format:
//   images: magic 0x00000803, count, rows, cols (big-endian u32), then count*rows*cols bytes
//   labels: magic 0x00000801, count, then count bytes in [0, 9]

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "positq/tensor.hpp"

namespace positq {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr double kPixelScale = 255.0;

class MnistDataset {
public:
    // Throws DataError on inconsistent sizes or labels outside [0, 9].
    MnistDataset(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> pixels,
                 std::vector<std::uint8_t> labels);

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    // [1, rows, cols], each pixel byte / 255.
    Tensor image(std::size_t index) const;
    int label(std::size_t index) const { return labels_.at(index); }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> pixels_;
    std::vector<std::uint8_t> labels_;
};

// Throws DataError for missing files, wrong magic, truncation, or count mismatch.
MnistDataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

}  // namespace positq
