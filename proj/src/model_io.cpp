#include "positq/model_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "positq/errors.hpp"

namespace positq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw LoadError(fmt::format("{}: {}", path, what));
}

const json& field(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
    const json& v = field(obj, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::size_t get_count(const json& v, const std::string& path, std::size_t min_value) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto value = v.get<std::int64_t>();
    if (value < static_cast<std::int64_t>(min_value)) fail(path, fmt::format("must be >= {}, got {}", min_value, value));
    return static_cast<std::size_t>(value);
}

std::size_t get_count(const json& obj, const char* key, const std::string& path, std::size_t min_value,
                      std::optional<std::size_t> fallback = std::nullopt) {
    if (fallback && !obj.contains(key)) return *fallback;
    return get_count(field(obj, key, path), path + "." + key, min_value);
}

Shape get_shape(const json& obj, const char* key, const std::string& path) {
    const json& v = field(obj, key, path);
    const std::string here = path + "." + key;
    if (!v.is_array() || v.empty()) fail(here, "expected a non-empty array of dimensions");
    Shape shape;
    for (std::size_t i = 0; i < v.size(); ++i) shape.push_back(get_count(v[i], fmt::format("{}[{}]", here, i), 1));
    return shape;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path, const std::string& field_path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(field_path, fmt::format("cannot open blob '{}'", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

float read_le_float(const std::uint8_t* p) {
    const std::uint32_t word = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                               (std::uint32_t{p[3]} << 24);
    return std::bit_cast<float>(word);
}

void append_le_float(std::string& out, float value) {
    const auto word = std::bit_cast<std::uint32_t>(value);
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((word >> shift) & 0xffu));
}

Layer parse_layer(const json& obj, const std::string& path, const ParameterMap& params) {
    if (!obj.is_object()) fail(path, "expected an object");
    Layer layer;
    const std::string kind = get_string(obj, "kind", path);
    try {
        layer.kind = parse_layer_kind(kind);
    } catch (const std::invalid_argument& e) {
        fail(path + ".kind", e.what());
    }

    if (layer.has_parameters()) {
        layer.weights = get_string(obj, "weights", path);
        layer.bias = get_string(obj, "bias", path);
        if (!params.contains(layer.weights)) fail(path + ".weights", fmt::format("unknown tensor '{}'", layer.weights));
        if (!params.contains(layer.bias)) fail(path + ".bias", fmt::format("unknown tensor '{}'", layer.bias));
    }
    if (layer.kind == LayerKind::kConv2d) {
        layer.stride = get_count(obj, "stride", path, 1, 1);
        const std::string padding = obj.contains("padding") ? get_string(obj, "padding", path) : "valid";
        if (padding == "valid") {
            layer.padding = Padding::kValid;
        } else if (padding == "same") {
            layer.padding = Padding::kSame;
        } else {
            fail(path + ".padding", fmt::format("expected \"valid\" or \"same\", got \"{}\"", padding));
        }
    }
    if (layer.kind == LayerKind::kMaxPool2d) {
        layer.window = get_count(obj, "window", path, 1);
        layer.stride = get_count(obj, "stride", path, 1, layer.window);
    }
    return layer;
}

}  // namespace

ModelBundle load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(fmt::format("{}: cannot open manifest", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw LoadError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
    const std::string root = "$";
    if (!doc.is_object()) fail(root, "manifest must be a JSON object");

    const json& version = field(doc, "schema_version", root);
    if (!version.is_number_integer() || version.get<int>() != kManifestSchemaVersion) {
        fail("$.schema_version", fmt::format("unsupported schema version {}, expected {}", version.dump(),
                                             kManifestSchemaVersion));
    }

    const std::string name = get_string(doc, "name", root);
    const Shape input_shape = get_shape(doc, "input_shape", root);
    const std::size_t num_classes = get_count(doc, "num_classes", root, 1);

    double pixel_scale = 255.0;
    if (doc.contains("preprocessing")) {
        const json& pre = doc["preprocessing"];
        if (!pre.is_object()) fail("$.preprocessing", "expected an object");
        const json& scale = field(pre, "pixel_scale", "$.preprocessing");
        if (!scale.is_number() || !(scale.get<double>() > 0.0)) {
            fail("$.preprocessing.pixel_scale", "expected a positive number");
        }
        pixel_scale = scale.get<double>();
    }

    // Tensors and their blob.
    const std::string blob_name = get_string(doc, "blob", root);
    const json& tensors = field(doc, "tensors", root);
    if (!tensors.is_array()) fail("$.tensors", "expected an array");
    const auto blob = read_bytes(path.parent_path() / blob_name, "$.blob");

    ParameterMap params;
    std::size_t declared_elements = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const std::string here = fmt::format("$.tensors[{}]", i);
        const json& t = tensors[i];
        if (!t.is_object()) fail(here, "expected an object");
        const std::string tname = get_string(t, "name", here);
        const Shape shape = get_shape(t, "shape", here);
        const std::size_t offset = get_count(t, "offset", here, 0);
        if (offset % 4 != 0) fail(here + ".offset", fmt::format("offset {} is not a multiple of 4", offset));
        if (params.contains(tname)) fail(here + ".name", fmt::format("duplicate tensor '{}'", tname));

        const std::size_t count = element_count(shape);
        declared_elements += count;
        if (offset + 4 * count > blob.size()) {
            fail(here, fmt::format("tensor '{}' ({} floats at byte {}) runs past the {}-byte blob", tname, count, offset,
                                   blob.size()));
        }
        std::vector<double> data(count);
        for (std::size_t k = 0; k < count; ++k) {
            data[k] = read_le_float(blob.data() + offset + 4 * k);
            if (!std::isfinite(data[k])) {
                fail(here, fmt::format("tensor '{}' has a non-finite value at index {}", tname, k));
            }
        }
        params.emplace(tname, Tensor(shape, std::move(data)));
    }
    if (blob.size() != 4 * declared_elements) {
        fail("$.blob", fmt::format("blob '{}' has {} bytes but tensors declare {} floats ({} bytes)", blob_name,
                                   blob.size(), declared_elements, 4 * declared_elements));
    }

    const json& layer_list = field(doc, "layers", root);
    if (!layer_list.is_array() || layer_list.empty()) fail("$.layers", "expected a non-empty array");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < layer_list.size(); ++i) {
        layers.push_back(parse_layer(layer_list[i], fmt::format("$.layers[{}]", i), params));
    }

    std::optional<BaselineRecord> baseline;
    if (doc.contains("baseline")) {
        const json& b = doc["baseline"];
        if (!b.is_object()) fail("$.baseline", "expected an object");
        BaselineRecord rec;
        rec.dataset = get_string(b, "dataset", "$.baseline");
        rec.images = get_count(b, "images", "$.baseline", 1);
        const json& top1 = field(b, "top1", "$.baseline");
        if (!top1.is_number() || top1.get<double>() < 0.0 || top1.get<double>() > 1.0) {
            fail("$.baseline.top1", "expected a number in [0, 1]");
        }
        rec.top1 = top1.get<double>();
        baseline = rec;
    }

    try {
        return ModelBundle{name, Model(std::move(layers), std::move(params), input_shape, num_classes), pixel_scale,
                           baseline};
    } catch (const ShapeError& e) {
        fail("$.layers", e.what());
    }
}

void save_manifest(const ModelBundle& bundle, const std::filesystem::path& path) {
    const Model& model = bundle.model;
    json doc;
    doc["schema_version"] = kManifestSchemaVersion;
    doc["name"] = bundle.name;
    doc["input_shape"] = model.input_shape();
    doc["num_classes"] = model.num_classes();
    doc["preprocessing"] = {{"pixel_scale", bundle.pixel_scale}};

    const std::string blob_name = path.stem().string() + ".bin";
    doc["blob"] = blob_name;

    std::string blob;
    json tensors = json::array();
    for (const auto& [name, tensor] : model.parameters()) {
        tensors.push_back({{"name", name}, {"shape", tensor.shape()}, {"offset", blob.size()}});
        for (double v : tensor.data()) append_le_float(blob, static_cast<float>(v));
    }
    doc["tensors"] = tensors;

    json layers = json::array();
    for (const Layer& layer : model.layers()) {
        json l = {{"kind", std::string(to_string(layer.kind))}};
        if (layer.has_parameters()) {
            l["weights"] = layer.weights;
            l["bias"] = layer.bias;
        }
        if (layer.kind == LayerKind::kConv2d) {
            l["stride"] = layer.stride;
            l["padding"] = layer.padding == Padding::kSame ? "same" : "valid";
        }
        if (layer.kind == LayerKind::kMaxPool2d) {
            l["window"] = layer.window;
            l["stride"] = layer.stride;
        }
        layers.push_back(l);
    }
    doc["layers"] = layers;

    if (bundle.baseline) {
        doc["baseline"] = {{"dataset", bundle.baseline->dataset},
                           {"images", bundle.baseline->images},
                           {"top1", bundle.baseline->top1}};
    }

    std::ofstream blob_out(path.parent_path() / blob_name, std::ios::binary);
    blob_out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!blob_out) throw LoadError(fmt::format("{}: cannot write blob", (path.parent_path() / blob_name).string()));

    std::ofstream out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw LoadError(fmt::format("{}: cannot write manifest", path.string()));
}

}  // namespace positq
