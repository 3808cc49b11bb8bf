#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "positq/layers.hpp"
#include "positq/tensor.hpp"

namespace positq {

class MnistDataset;

enum class LayerKind { kConv2d, kMaxPool2d, kRelu, kFlatten, kDense, kSoftmax };

std::string_view to_string(LayerKind kind);
// Throws std::invalid_argument for unknown names.
LayerKind parse_layer_kind(std::string_view name);

struct Layer {
    LayerKind kind = LayerKind::kRelu;
    // conv2d / dense parameter names in the model's parameter map.
    std::string weights;
    std::string bias;
    // conv2d and maxpool2d.
    std::size_t stride = 1;
    Padding padding = Padding::kValid;
    // maxpool2d.
    std::size_t window = 2;

    bool has_parameters() const { return kind == LayerKind::kConv2d || kind == LayerKind::kDense; }
};

using ParameterMap = std::map<std::string, Tensor, std::less<>>;

// An immutable, shape-checked layer chain ending in softmax over num_classes.
class Model {
public:
    // Throws ShapeError naming the first layer (by index) whose shapes do not chain,
    // and LoadError if a layer references a missing parameter.
    Model(std::vector<Layer> layers, ParameterMap parameters, Shape input_shape, std::size_t num_classes);

    const std::vector<Layer>& layers() const { return layers_; }
    const ParameterMap& parameters() const { return parameters_; }
    const Shape& input_shape() const { return input_shape_; }
    std::size_t num_classes() const { return num_classes_; }

    // Output shape of each layer, in order.
    const std::vector<Shape>& layer_shapes() const { return layer_shapes_; }

    const Tensor& parameter(std::string_view name) const;

    // Names referenced as biases by conv2d/dense layers.
    std::vector<std::string> bias_names() const;

    // Same topology with a replacement parameter set (re-validated).
    Model with_parameters(ParameterMap parameters) const;

private:
    std::vector<Layer> layers_;
    ParameterMap parameters_;
    Shape input_shape_;
    std::size_t num_classes_;
    std::vector<Shape> layer_shapes_;
};

// Runs every layer in order. Throws ShapeError prefixed with the layer index on mismatch.
Tensor forward(const Model& model, const Tensor& input);

// Fraction of the first `limit` images whose argmax matches the label.
// Images are split across `jobs` threads; the result does not depend on jobs.
// Throws DataError for an empty dataset or limit == 0, DomainError if limit > size.
double evaluate_top1(const Model& model, const MnistDataset& dataset, std::size_t limit, unsigned jobs = 1);

}  // namespace positq
