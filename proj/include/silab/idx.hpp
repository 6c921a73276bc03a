#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "silab/dataset.hpp"
#include "silab/errors.hpp"

namespace silab {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw ParseError(path + ": truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline std::vector<unsigned char> read_bytes(std::ifstream& in, std::size_t count,
                                             const std::string& path) {
    std::vector<unsigned char> data(count);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count)))
        throw ParseError(path + ": truncated data section");
    return data;
}

}  // namespace detail

// Parses a big-endian IDX image/label file pair (u8 image tensor with magic
// 0x00000803, u8 label vector with magic 0x00000801). Pixels are scaled to
// [0, 1]. All samples land in the train split; combine two loads for a
// train/test pair.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw ParseError(images_path + ": cannot open file");
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw ParseError(labels_path + ": cannot open file");

    const std::uint32_t images_magic = detail::read_be_u32(images, images_path);
    if (images_magic != kIdxImagesMagic)
        throw ParseError(images_path + ": wrong magic number for an IDX image file");
    const std::uint32_t count = detail::read_be_u32(images, images_path);
    const std::uint32_t rows = detail::read_be_u32(images, images_path);
    const std::uint32_t cols = detail::read_be_u32(images, images_path);

    const std::uint32_t labels_magic = detail::read_be_u32(labels, labels_path);
    if (labels_magic != kIdxLabelsMagic)
        throw ParseError(labels_path + ": wrong magic number for an IDX label file");
    const std::uint32_t label_count = detail::read_be_u32(labels, labels_path);
    if (label_count != count)
        throw ParseError(images_path + ": image count " + std::to_string(count) +
                         " does not match label count " + std::to_string(label_count));

    const std::size_t pixels = std::size_t(rows) * cols;
    const auto pixel_bytes = detail::read_bytes(images, std::size_t(count) * pixels, images_path);
    const auto label_bytes = detail::read_bytes(labels, count, labels_path);

    Dataset ds;
    ds.input_dim = pixels;
    ds.inputs.resize(pixel_bytes.size());
    for (std::size_t i = 0; i < pixel_bytes.size(); ++i)
        ds.inputs[i] = static_cast<double>(pixel_bytes[i]) / 255.0;
    ds.labels.resize(count);
    int max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        ds.labels[i] = static_cast<int>(label_bytes[i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = static_cast<std::size_t>(max_label) + 1;
    ds.train_indices.resize(count);
    for (std::size_t i = 0; i < count; ++i) ds.train_indices[i] = i;
    return ds;
}

// Joins separately loaded train and test IDX pairs into one dataset.
inline Dataset combine_idx_splits(const Dataset& train, const Dataset& test) {
    if (train.input_dim != test.input_dim)
        throw IncompatibilityError("train/test IDX files have different image sizes");
    Dataset ds;
    ds.input_dim = train.input_dim;
    ds.num_classes = std::max(train.num_classes, test.num_classes);
    ds.inputs = train.inputs;
    ds.inputs.insert(ds.inputs.end(), test.inputs.begin(), test.inputs.end());
    ds.labels = train.labels;
    ds.labels.insert(ds.labels.end(), test.labels.begin(), test.labels.end());
    ds.train_indices.resize(train.num_samples());
    for (std::size_t i = 0; i < train.num_samples(); ++i) ds.train_indices[i] = i;
    ds.test_indices.resize(test.num_samples());
    for (std::size_t i = 0; i < test.num_samples(); ++i)
        ds.test_indices[i] = train.num_samples() + i;
    return ds;
}

}  // namespace silab
