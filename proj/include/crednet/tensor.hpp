#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace crednet::ad {

// Dense row-major 64-bit float matrix, optionally attached to a Tape node.
// Treated as an immutable value once it leaves the function that built it;
// copies share the buffer.
class Tensor {
public:
    Tensor() : rows_(0), cols_(0), buf_(std::make_shared<std::vector<double>>()) {}

    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols),
          buf_(std::make_shared<std::vector<double>>(rows * cols, 0.0)) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);
    static Tensor col(std::vector<double> v);
    static Tensor full(std::size_t rows, std::size_t cols, double v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }

    const double* data() const { return buf_->data(); }
    double* data() { return buf_->data(); }
    const std::vector<double>& values() const { return *buf_; }

    double operator()(std::size_t i, std::size_t j) const { return (*buf_)[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return (*buf_)[i * cols_ + j]; }
    double operator[](std::size_t i) const { return (*buf_)[i]; }
    double& operator[](std::size_t i) { return (*buf_)[i]; }

    double item() const; // requires size() == 1

    int node() const { return node_; }
    bool attached() const { return node_ >= 0; }
    Tensor detached() const;

    std::string shape_str() const;

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    friend class Tape;
    std::size_t rows_, cols_;
    std::shared_ptr<std::vector<double>> buf_;
    int node_ = -1;
};

} // namespace crednet::ad
