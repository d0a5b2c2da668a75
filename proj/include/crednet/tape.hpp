#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crednet/rng.hpp"
#include "crednet/tensor.hpp"

namespace crednet::ad {

enum class OpKind {
    Matmul,
    Add,
    Mul,
    ConcatRows,
    ConcatCols,
    LeakyRelu,
    Relu,
    Sigmoid,
    SoftmaxRows,
    Log,
    Scale,
    Sum,
    MaskedSoftmaxRows,
    Dropout,
};

// Parameterized op selector for the generic apply() entry point.
struct Op {
    OpKind kind;
    double slope = 0.2;  // LeakyRelu
    double factor = 1.0; // Scale
    double rate = 0.0;   // Dropout
    bool train = false;  // Dropout
    Tensor mask;         // MaskedSoftmaxRows
    Rng* rng = nullptr;  // Dropout
};

// Gradients keyed by tape node id. Every leaf of the consumed tape has an
// entry (all-zeros when the loss does not depend on it).
class GradMap {
public:
    const Tensor& at(int node_id) const;
    const Tensor& at(const Tensor& t) const { return at(t.node()); }
    bool has(int node_id) const { return grads_.count(node_id) > 0; }

private:
    friend class Tape;
    std::unordered_map<int, Tensor> grads_;
};

// Define-by-run recording tape. One tape per training driver; rebuilt every
// forward pass and consumed by backward().
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Attach a value as a differentiable leaf.
    Tensor leaf(const Tensor& value, std::string name = "");

    Tensor matmul(const Tensor& a, const Tensor& b);
    // b must have a's shape, or be a (1,m) row or (1,1) scalar broadcast over a
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    // multiply by a (1,1) tensor, gradient flows into both
    Tensor mul_scalar(const Tensor& a, const Tensor& s);
    Tensor scale(const Tensor& a, double factor);
    // row i of a scaled by v[i]; v is (n,1)
    Tensor scale_rows(const Tensor& a, const Tensor& v);
    Tensor concat_rows(std::span<const Tensor> parts);
    Tensor concat_cols(std::span<const Tensor> parts);
    Tensor slice_rows(const Tensor& a, std::size_t lo, std::size_t hi);
    Tensor slice_cols(const Tensor& a, std::size_t lo, std::size_t hi);
    Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);
    Tensor leaky_relu(const Tensor& a, double slope = 0.2);
    Tensor relu(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor log(const Tensor& a);
    Tensor softmax_rows(const Tensor& a);
    // mask nonzero = keep; masked entries get exactly zero weight
    Tensor masked_softmax_rows(const Tensor& a, const Tensor& mask);
    // (n,1) x (m,1) -> (n,m) with out[i][j] = a[i] + b[j]
    Tensor outer_sum(const Tensor& a, const Tensor& b);
    Tensor sum(const Tensor& a);
    Tensor row_sum(const Tensor& a); // (n,m) -> (n,1)
    Tensor dropout(const Tensor& a, double rate, bool train, Rng& rng);
    // mean binary cross-entropy; pred is a probability column, labels 0/1,
    // predictions clamped into [1e-7, 1-1e-7]
    Tensor bce_loss(const Tensor& pred, const Tensor& labels);

    // Generic dispatcher over the enumerated op kinds.
    Tensor apply(const Op& op, const std::vector<Tensor>& inputs);

    // Reverse pass from a scalar loss; returns leaf gradients and clears
    // the tape.
    GradMap backward(const Tensor& loss);

    void clear();
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::string op;
        std::size_t rows, cols;
        bool is_leaf = false;
        std::string name;
        // accumulates into grads_ of parent nodes
        std::function<void(Tape&, const std::vector<double>&)> back;
    };

    int push(Node n);
    Tensor attach(Tensor t, Node n);
    std::vector<double>& grad_buf(int id);
    void accumulate(int id, const double* g, std::size_t n);

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
};

} // namespace crednet::ad
