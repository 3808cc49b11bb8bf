#include "positq/mnist.hpp"

#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "positq/errors.hpp"

namespace positq {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("{}: cannot open", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

MnistDataset::MnistDataset(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> pixels,
                           std::vector<std::uint8_t> labels)
    : rows_(rows), cols_(cols), pixels_(std::move(pixels)), labels_(std::move(labels)) {
    if (pixels_.size() != labels_.size() * rows_ * cols_) {
        throw DataError(fmt::format("{} labels need {} pixels of {}x{} images, got {}", labels_.size(),
                                    labels_.size() * rows_ * cols_, rows_, cols_, pixels_.size()));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] > 9) throw DataError(fmt::format("label {} at index {} outside [0, 9]", labels_[i], i));
    }
}

Tensor MnistDataset::image(std::size_t index) const {
    if (index >= size()) throw DataError(fmt::format("image index {} out of range ({} images)", index, size()));
    const std::size_t stride = rows_ * cols_;
    std::vector<double> data(stride);
    const auto* src = pixels_.data() + index * stride;
    for (std::size_t i = 0; i < stride; ++i) data[i] = src[i] / kPixelScale;
    return Tensor({1, rows_, cols_}, std::move(data));
}

MnistDataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);

    if (images.size() < 16) throw DataError(fmt::format("{}: truncated IDX header", images_path.string()));
    if (labels.size() < 8) throw DataError(fmt::format("{}: truncated IDX header", labels_path.string()));
    if (const auto magic = read_be32(images, 0); magic != kIdxImageMagic) {
        throw DataError(fmt::format("{}: image magic {:#010x}, expected {:#010x}", images_path.string(), magic, kIdxImageMagic));
    }
    if (const auto magic = read_be32(labels, 0); magic != kIdxLabelMagic) {
        throw DataError(fmt::format("{}: label magic {:#010x}, expected {:#010x}", labels_path.string(), magic, kIdxLabelMagic));
    }

    const std::size_t image_count = read_be32(images, 4);
    const std::size_t rows = read_be32(images, 8);
    const std::size_t cols = read_be32(images, 12);
    const std::size_t label_count = read_be32(labels, 4);
    if (image_count != label_count) {
        throw DataError(fmt::format("image count {} != label count {}", image_count, label_count));
    }
    if (images.size() != 16 + image_count * rows * cols) {
        throw DataError(fmt::format("{}: expected {} bytes, found {}", images_path.string(), 16 + image_count * rows * cols,
                                    images.size()));
    }
    if (labels.size() != 8 + label_count) {
        throw DataError(fmt::format("{}: expected {} bytes, found {}", labels_path.string(), 8 + label_count, labels.size()));
    }

    return MnistDataset(rows, cols, std::vector<std::uint8_t>(images.begin() + 16, images.end()),
                        std::vector<std::uint8_t>(labels.begin() + 8, labels.end()));
}

}  // namespace positq
