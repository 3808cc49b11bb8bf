#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "positq/errors.hpp"
#include "positq/mnist.hpp"
#include "positq/model_io.hpp"

using namespace positq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kModelDir = POSITQ_MODEL_DIR;
const fs::path kDataDir = POSITQ_DATA_DIR;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("positq_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json golden_manifest() {
    std::ifstream in(kModelDir / "lenet" / "lenet.json");
    return json::parse(in);
}

// Writes `doc` next to a copy of the LeNet blob and loads it.
ModelBundle load_variant(const TempDir& dir, const json& doc) {
    fs::copy_file(kModelDir / "lenet" / "lenet.bin", dir.path() / "lenet.bin", fs::copy_options::overwrite_existing);
    write_text(dir.path() / "m.json", doc.dump());
    return load_manifest(dir.path() / "m.json");
}

std::string load_error(const TempDir& dir, const json& doc) {
    try {
        load_variant(dir, doc);
    } catch (const LoadError& e) {
        return e.what();
    }
    return {};
}

std::vector<std::uint8_t> be32(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
            static_cast<std::uint8_t>(v)};
}

void write_idx(const fs::path& images, const fs::path& labels, std::uint32_t count, std::uint32_t rows,
               std::uint32_t cols, std::uint8_t fill, std::uint8_t label = 3) {
    std::vector<std::uint8_t> img = be32(kIdxImageMagic);
    for (auto v : {count, rows, cols}) {
        auto b = be32(v);
        img.insert(img.end(), b.begin(), b.end());
    }
    img.resize(img.size() + std::size_t{count} * rows * cols, fill);
    std::vector<std::uint8_t> lab = be32(kIdxLabelMagic);
    auto b = be32(count);
    lab.insert(lab.end(), b.begin(), b.end());
    lab.resize(lab.size() + count, label);
    write_bytes(images, img);
    write_bytes(labels, lab);
}

}  // namespace

TEST(LoadManifest, GoldenLeNet) {
    const ModelBundle b = load_manifest(kModelDir / "lenet" / "lenet.json");
    EXPECT_EQ(b.name, "lenet");
    EXPECT_EQ(b.model.input_shape(), (Shape{1, 28, 28}));
    EXPECT_EQ(b.model.num_classes(), 10u);
    std::size_t parameterized = 0;
    for (const Layer& l : b.model.layers()) parameterized += l.has_parameters() ? 1 : 0;
    EXPECT_EQ(parameterized, 4u);
    EXPECT_EQ(b.model.parameter("conv1.weight").shape(), (Shape{20, 1, 5, 5}));
    EXPECT_EQ(b.model.parameter("fc1.weight").shape(), (Shape{500, 800}));
    ASSERT_TRUE(b.baseline.has_value());
    EXPECT_GE(b.baseline->top1, 0.985);
    EXPECT_EQ(b.pixel_scale, 255.0);
}

TEST(LoadManifest, MinimalSoftmaxManifest) {
    TempDir dir;
    write_bytes(dir.path() / "empty.bin", {});
    write_text(dir.path() / "m.json", R"({"schema_version": 1, "name": "s", "input_shape": [3], "num_classes": 3,
        "blob": "empty.bin", "tensors": [], "layers": [{"kind": "softmax"}]})");
    const ModelBundle b = load_manifest(dir.path() / "m.json");
    EXPECT_FALSE(b.baseline.has_value());
    const Tensor p = forward(b.model, Tensor({3}, {0, 0, 0}));
    EXPECT_NEAR(p[0], 1.0 / 3, 1e-15);
}

TEST(LoadManifest, WrongBlobLengthNamesTheTensor) {
    TempDir dir;
    json doc = golden_manifest();
    doc["tensors"][7]["shape"] = json::array({20});  // fc2.bias grows past the blob end
    const std::string msg = load_error(dir, doc);
    EXPECT_NE(msg.find("fc2.bias"), std::string::npos) << msg;
    EXPECT_NE(msg.find("$.tensors[7]"), std::string::npos) << msg;

    // A blob with trailing bytes is rejected too.
    fs::copy_file(kModelDir / "lenet" / "lenet.bin", dir.path() / "lenet.bin", fs::copy_options::overwrite_existing);
    auto bytes = read_bytes(dir.path() / "lenet.bin");
    bytes.resize(bytes.size() + 4);
    write_bytes(dir.path() / "lenet.bin", bytes);
    write_text(dir.path() / "m.json", golden_manifest().dump());
    try {
        load_manifest(dir.path() / "m.json");
        FAIL();
    } catch (const LoadError& e) {
        EXPECT_NE(std::string(e.what()).find("$.blob"), std::string::npos) << e.what();
    }
}

TEST(LoadManifest, BadSchemaVersionAndMissingBlob) {
    TempDir dir;
    json doc = golden_manifest();
    doc["schema_version"] = 2;
    EXPECT_NE(load_error(dir, doc).find("$.schema_version"), std::string::npos);

    doc = golden_manifest();
    doc["blob"] = "nope.bin";
    EXPECT_NE(load_error(dir, doc).find("$.blob"), std::string::npos);

    EXPECT_THROW(load_manifest(dir.path() / "absent.json"), LoadError);
    write_text(dir.path() / "broken.json", "{ not json");
    EXPECT_THROW(load_manifest(dir.path() / "broken.json"), LoadError);
}

TEST(LoadManifest, RejectsEveryInvariantViolatingMutation) {
    const json golden = golden_manifest();
    using Mutation = std::function<void(json&)>;
    const std::vector<std::pair<std::string, Mutation>> mutations = {
        {"$.schema_version", [](json& d) { d.erase("schema_version"); }},
        {"$.schema_version", [](json& d) { d["schema_version"] = "1"; }},
        {"$.name", [](json& d) { d.erase("name"); }},
        {"$.name", [](json& d) { d["name"] = 5; }},
        {"$.input_shape", [](json& d) { d.erase("input_shape"); }},
        {"$.input_shape", [](json& d) { d["input_shape"] = json::array(); }},
        {"$.input_shape[1]", [](json& d) { d["input_shape"][1] = 0; }},
        {"$.input_shape[1]", [](json& d) { d["input_shape"][1] = -28; }},
        {"$.layers", [](json& d) { d["input_shape"] = {1, 32, 32}; }},
        {"$.num_classes", [](json& d) { d["num_classes"] = 0; }},
        {"$.layers", [](json& d) { d["num_classes"] = 11; }},
        {"$.preprocessing.pixel_scale", [](json& d) { d["preprocessing"]["pixel_scale"] = -1; }},
        {"$.tensors", [](json& d) { d["tensors"] = json::object(); }},
        {"$.tensors[0].name", [](json& d) { d["tensors"][0].erase("name"); }},
        {"$.tensors[1].name", [](json& d) { d["tensors"][1]["name"] = "conv1.weight"; }},
        {"$.tensors[0].offset", [](json& d) { d["tensors"][0]["offset"] = 2; }},
        {"$.tensors[0].offset", [](json& d) { d["tensors"][0]["offset"] = -4; }},
        {"$.tensors[0].shape", [](json& d) { d["tensors"][0]["shape"] = "20x1x5x5"; }},
        {"$.blob", [](json& d) { d["tensors"][0]["shape"] = {20, 1, 5, 4}; }},
        {"$.layers", [](json& d) {
             d["tensors"][0]["shape"] = {20, 1, 25, 1};  // same element count, wrong kernel shape
         }},
        {"$.layers", [](json& d) { d["layers"] = json::array(); }},
        {"$.layers[0].kind", [](json& d) { d["layers"][0]["kind"] = "lrn"; }},
        {"$.layers[0].kind", [](json& d) { d["layers"][0].erase("kind"); }},
        {"$.layers[0].weights", [](json& d) { d["layers"][0]["weights"] = "conv9.weight"; }},
        {"$.layers[0].bias", [](json& d) { d["layers"][0].erase("bias"); }},
        {"$.layers[0].stride", [](json& d) { d["layers"][0]["stride"] = 0; }},
        {"$.layers[0].padding", [](json& d) { d["layers"][0]["padding"] = "full"; }},
        {"$.layers[1].window", [](json& d) { d["layers"][1].erase("window"); }},
        {"$.layers", [](json& d) { d["layers"].erase(d["layers"].size() - 1); }},  // no softmax
        {"$.layers", [](json& d) { d["layers"].erase(4); }},                       // no flatten
        {"$.baseline.top1", [](json& d) { d["baseline"]["top1"] = 1.5; }},
        {"$.baseline.images", [](json& d) { d["baseline"].erase("images"); }},
    };
    TempDir dir;
    EXPECT_NO_THROW(load_variant(dir, golden));
    for (const auto& [path, mutate] : mutations) {
        json doc = golden;
        mutate(doc);
        const std::string msg = load_error(dir, doc);
        EXPECT_FALSE(msg.empty()) << "mutation at " << path << " was accepted";
        EXPECT_EQ(msg.rfind(path, 0), 0u) << "expected error at " << path << ", got: " << msg;
    }
}

TEST(SaveManifest, RoundTripIsBitExact) {
    const ModelBundle original = load_manifest(kModelDir / "lenet" / "lenet.json");
    TempDir dir;
    save_manifest(original, dir.path() / "copy.json");
    const ModelBundle copy = load_manifest(dir.path() / "copy.json");
    EXPECT_EQ(copy.name, original.name);
    EXPECT_EQ(copy.model.parameters(), original.model.parameters());
    EXPECT_EQ(copy.model.layer_shapes(), original.model.layer_shapes());
    ASSERT_TRUE(copy.baseline.has_value());
    EXPECT_EQ(copy.baseline->top1, original.baseline->top1);
}

TEST(LoadMnist, OfficialTestSet) {
    const MnistDataset data =
        load_mnist(kDataDir / "mnist" / "t10k-images-idx3-ubyte", kDataDir / "mnist" / "t10k-labels-idx1-ubyte");
    EXPECT_EQ(data.size(), 10000u);
    EXPECT_EQ(data.rows(), 28u);
    EXPECT_EQ(data.cols(), 28u);
    EXPECT_EQ(data.label(0), 7);
    EXPECT_EQ(data.label(1), 2);
    const Tensor img = data.image(0);
    EXPECT_EQ(img.shape(), (Shape{1, 28, 28}));
    for (double v : img.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(LoadMnist, NormalizationEndpoints) {
    TempDir dir;
    write_idx(dir.path() / "i", dir.path() / "l", 2, 2, 3, 255);
    const MnistDataset data = load_mnist(dir.path() / "i", dir.path() / "l");
    EXPECT_EQ(data.image(1), Tensor({1, 2, 3}, std::vector<double>(6, 1.0)));
    write_idx(dir.path() / "i", dir.path() / "l", 1, 2, 2, 0);
    EXPECT_EQ(load_mnist(dir.path() / "i", dir.path() / "l").image(0), Tensor({1, 2, 2}));
}

TEST(LoadMnist, MalformedFiles) {
    TempDir dir;
    const fs::path img = dir.path() / "i", lab = dir.path() / "l";

    write_idx(img, lab, 3, 4, 4, 10);
    auto bytes = read_bytes(img);
    bytes.pop_back();
    write_bytes(img, bytes);
    EXPECT_THROW(load_mnist(img, lab), DataError);  // truncated pixels

    write_idx(img, lab, 3, 4, 4, 10);
    write_bytes(lab, {0, 0, 8});
    EXPECT_THROW(load_mnist(img, lab), DataError);  // truncated header

    write_idx(img, lab, 3, 4, 4, 10);
    EXPECT_THROW(load_mnist(lab, img), DataError);  // swapped: wrong magic

    write_idx(img, lab, 3, 4, 4, 10);
    auto labels = read_bytes(lab);
    labels[7] = 2;  // count field now 2, file still holds 3 labels
    write_bytes(lab, labels);
    EXPECT_THROW(load_mnist(img, lab), DataError);

    write_idx(img, lab, 2, 4, 4, 10, 12);
    EXPECT_THROW(load_mnist(img, lab), DataError);  // label out of range

    EXPECT_THROW(load_mnist(dir.path() / "missing", lab), DataError);
}
