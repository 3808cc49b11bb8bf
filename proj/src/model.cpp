#include "positq/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "positq/errors.hpp"
#include "positq/mnist.hpp"

namespace positq {

namespace {

constexpr std::string_view kLayerNames[] = {"conv2d", "maxpool2d", "relu", "flatten", "dense", "softmax"};

}  // namespace

std::string_view to_string(LayerKind kind) { return kLayerNames[static_cast<int>(kind)]; }

LayerKind parse_layer_kind(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kLayerNames); ++i) {
        if (kLayerNames[i] == name) return static_cast<LayerKind>(i);
    }
    throw std::invalid_argument(fmt::format("unknown layer kind '{}'", name));
}

Model::Model(std::vector<Layer> layers, ParameterMap parameters, Shape input_shape, std::size_t num_classes)
    : layers_(std::move(layers)),
      parameters_(std::move(parameters)),
      input_shape_(std::move(input_shape)),
      num_classes_(num_classes) {
    if (layers_.empty()) throw ShapeError("model has no layers");

    Shape shape = input_shape_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& layer = layers_[i];
        if (layer.has_parameters()) {
            for (const std::string* name : {&layer.weights, &layer.bias}) {
                if (!parameters_.contains(*name)) {
                    throw LoadError(fmt::format("layers[{}]: {} references unknown parameter '{}'", i,
                                                to_string(layer.kind), *name));
                }
            }
        }
        try {
            switch (layer.kind) {
                case LayerKind::kConv2d:
                    shape = conv2d_shape(shape, parameter(layer.weights).shape(), parameter(layer.bias).shape(),
                                         layer.stride, layer.padding);
                    break;
                case LayerKind::kMaxPool2d:
                    shape = maxpool2d_shape(shape, layer.window, layer.stride);
                    break;
                case LayerKind::kFlatten:
                    shape = {element_count(shape)};
                    break;
                case LayerKind::kDense:
                    shape = dense_shape(shape, parameter(layer.weights).shape(), parameter(layer.bias).shape());
                    break;
                case LayerKind::kRelu:
                case LayerKind::kSoftmax:
                    break;
            }
        } catch (const ShapeError& e) {
            throw ShapeError(fmt::format("layer {} ({}): {}", i, to_string(layer.kind), e.what()));
        }
        layer_shapes_.push_back(shape);
    }

    if (layers_.back().kind != LayerKind::kSoftmax) {
        throw ShapeError(fmt::format("last layer must be softmax, got {}", to_string(layers_.back().kind)));
    }
    if (element_count(shape) != num_classes_) {
        throw ShapeError(fmt::format("model outputs {} values but declares {} classes", to_string(shape), num_classes_));
    }
}

const Tensor& Model::parameter(std::string_view name) const {
    const auto it = parameters_.find(name);
    if (it == parameters_.end()) throw LoadError(fmt::format("unknown parameter '{}'", name));
    return it->second;
}

std::vector<std::string> Model::bias_names() const {
    std::vector<std::string> names;
    for (const Layer& layer : layers_) {
        if (layer.has_parameters()) names.push_back(layer.bias);
    }
    return names;
}

Model Model::with_parameters(ParameterMap parameters) const {
    return Model(layers_, std::move(parameters), input_shape_, num_classes_);
}

Tensor forward(const Model& model, const Tensor& input) {
    if (input.shape() != model.input_shape()) {
        throw ShapeError(fmt::format("layer 0: input shape {} does not match model input {}",
                                     to_string(input.shape()), to_string(model.input_shape())));
    }
    Tensor x = input;
    const auto& layers = model.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& layer = layers[i];
        try {
            switch (layer.kind) {
                case LayerKind::kConv2d:
                    x = conv2d(x, model.parameter(layer.weights), model.parameter(layer.bias), layer.stride,
                               layer.padding);
                    break;
                case LayerKind::kMaxPool2d:
                    x = maxpool2d(x, layer.window, layer.stride);
                    break;
                case LayerKind::kRelu:
                    x = relu(x);
                    break;
                case LayerKind::kFlatten:
                    x = flatten(x);
                    break;
                case LayerKind::kDense:
                    x = dense(x, model.parameter(layer.weights), model.parameter(layer.bias));
                    break;
                case LayerKind::kSoftmax:
                    x = softmax(x);
                    break;
            }
        } catch (const ShapeError& e) {
            throw ShapeError(fmt::format("layer {} ({}): {}", i, to_string(layer.kind), e.what()));
        }
    }
    return x;
}

double evaluate_top1(const Model& model, const MnistDataset& dataset, std::size_t limit, unsigned jobs) {
    if (dataset.empty()) throw DataError("cannot evaluate on an empty dataset");
    if (limit == 0) throw DataError("evaluation limit must be >= 1");
    if (limit > dataset.size()) {
        throw DomainError(fmt::format("limit {} exceeds dataset size {}", limit, dataset.size()));
    }

    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, limit);
    std::vector<std::size_t> correct(workers, 0);
    auto run = [&](std::size_t worker) {
        for (std::size_t i = worker; i < limit; i += workers) {
            const Tensor probs = forward(model, dataset.image(i));
            if (static_cast<int>(argmax(probs)) == dataset.label(i)) ++correct[worker];
        }
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> threads;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    run(w);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        threads.clear();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::size_t total = 0;
    for (std::size_t c : correct) total += c;
    return static_cast<double>(total) / static_cast<double>(limit);
}

}  // namespace positq
