#include "positq/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "positq/errors.hpp"

namespace positq {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, "x")); }

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        throw ShapeError(fmt::format("shape {} needs {} elements, got {}", to_string(shape_),
                                     element_count(shape_), data_.size()));
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    if (element_count(shape) != data_.size()) {
        throw ShapeError(fmt::format("cannot reshape {} to {}", to_string(shape_), to_string(shape)));
    }
    return Tensor(std::move(shape), data_);
}

std::size_t argmax(const Tensor& t) {
    if (t.empty()) throw ShapeError("argmax of an empty tensor");
    const auto d = t.data();
    return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace positq
