#pragma once

// Model manifests: a JSON document describing the layer chain plus one raw
// little-endian float32 blob holding every tensor. See docs/manifest.md.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "positq/model.hpp"

namespace positq {

inline constexpr int kManifestSchemaVersion = 1;

// Training-time accuracy recorded by the exporter.
struct BaselineRecord {
    std::string dataset;
    std::size_t images = 0;
    double top1 = 0.0;
};

struct ModelBundle {
    std::string name;
    Model model;
    double pixel_scale = 255.0;  // inputs are raw pixel bytes divided by this
    std::optional<BaselineRecord> baseline;
};

// Parses, validates and shape-checks a manifest; the blob path is resolved
// relative to the manifest's directory. Throws LoadError whose message starts
// with the offending field path (e.g. "$.tensors[2].shape: ...").
ModelBundle load_manifest(const std::filesystem::path& path);

// Writes the manifest and a sibling "<stem>.bin" blob. Parameters are stored
// as float32, so values that are not float-representable are rounded.
void save_manifest(const ModelBundle& bundle, const std::filesystem::path& path);

}  // namespace positq
