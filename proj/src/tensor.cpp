#include "crednet/tensor.hpp"

#include <stdexcept>
#include <utility>

namespace crednet::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols),
      buf_(std::make_shared<std::vector<double>>(std::move(values))) {
    if (buf_->size() != rows_ * cols_)
        throw std::runtime_error("tensor: " + std::to_string(buf_->size()) +
                                 " values for shape " + shape_str());
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

Tensor Tensor::row(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor(1, n, std::move(v));
}

Tensor Tensor::col(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor(n, 1, std::move(v));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v) {
    return Tensor(rows, cols, std::vector<double>(rows * cols, v));
}

double Tensor::item() const {
    if (size() != 1)
        throw std::runtime_error("item() on non-scalar tensor " + shape_str());
    return (*buf_)[0];
}

Tensor Tensor::detached() const {
    Tensor t = *this;
    t.node_ = -1;
    return t;
}

std::string Tensor::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

} // namespace crednet::ad
