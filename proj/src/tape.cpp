#include "crednet/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "crednet/kernels.hpp"

namespace crednet::ad {

namespace {

constexpr double kBceClamp = 1e-7;

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::runtime_error(op + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

bool any_attached(std::span<const Tensor> ts) {
    for (const auto& t : ts)
        if (t.attached()) return true;
    return false;
}

} // namespace

const Tensor& GradMap::at(int node_id) const {
    auto it = grads_.find(node_id);
    if (it == grads_.end())
        throw std::runtime_error("no gradient for node " + std::to_string(node_id));
    return it->second;
}

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::attach(Tensor t, Node n) {
    n.rows = t.rows();
    n.cols = t.cols();
    t.node_ = push(std::move(n));
    return t;
}

std::vector<double>& Tape::grad_buf(int id) {
    if (grads_[id].empty())
        grads_[id].assign(nodes_[id].rows * nodes_[id].cols, 0.0);
    return grads_[id];
}

void Tape::accumulate(int id, const double* g, std::size_t n) {
    auto& buf = grad_buf(id);
    for (std::size_t i = 0; i < n; ++i) buf[i] += g[i];
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
}

Tensor Tape::leaf(const Tensor& value, std::string name) {
    Node n;
    n.op = "leaf";
    n.is_leaf = true;
    n.name = std::move(name);
    return attach(value.detached(), std::move(n));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    Tensor out(a.rows(), b.cols());
    kern::matmul(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
    if (!a.attached() && !b.attached()) return out;
    Node n;
    n.op = "matmul";
    n.back = [a, b](Tape& t, const std::vector<double>& g) {
        if (a.attached()) {
            std::vector<double> da(a.size());
            kern::matmul_nt(g.data(), b.data(), da.data(), a.rows(), b.cols(), a.cols());
            t.accumulate(a.node(), da.data(), da.size());
        }
        if (b.attached()) {
            std::vector<double> db(b.size());
            kern::matmul_tn(a.data(), g.data(), db.data(), a.rows(), a.cols(), b.cols());
            t.accumulate(b.node(), db.data(), db.size());
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    const bool same = a.same_shape(b);
    const bool row_bcast = !same && b.rows() == 1 && b.cols() == a.cols();
    const bool scalar_bcast = !same && !row_bcast && b.size() == 1;
    if (!same && !row_bcast && !scalar_bcast) shape_error("add", a, b);
    Tensor out(a.rows(), a.cols());
    const std::size_t m = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < m; ++j)
            out(i, j) = a(i, j) + (same ? b(i, j) : scalar_bcast ? b[0] : b(0, j));
    if (!a.attached() && !b.attached()) return out;
    Node n;
    n.op = "add";
    n.back = [a, b, same, scalar_bcast](Tape& t, const std::vector<double>& g) {
        if (a.attached()) t.accumulate(a.node(), g.data(), g.size());
        if (b.attached()) {
            if (same) {
                t.accumulate(b.node(), g.data(), g.size());
            } else if (scalar_bcast) {
                double s = 0.0;
                for (double v : g) s += v;
                t.accumulate(b.node(), &s, 1);
            } else {
                std::vector<double> db(b.size(), 0.0);
                for (std::size_t i = 0; i < a.rows(); ++i)
                    for (std::size_t j = 0; j < a.cols(); ++j) db[j] += g[i * a.cols() + j];
                t.accumulate(b.node(), db.data(), db.size());
            }
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_error("mul", a, b);
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    if (!a.attached() && !b.attached()) return out;
    Node n;
    n.op = "mul";
    n.back = [a, b](Tape& t, const std::vector<double>& g) {
        if (a.attached()) {
            std::vector<double> da(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] * b[i];
            t.accumulate(a.node(), da.data(), da.size());
        }
        if (b.attached()) {
            std::vector<double> db(b.size());
            for (std::size_t i = 0; i < b.size(); ++i) db[i] = g[i] * a[i];
            t.accumulate(b.node(), db.data(), db.size());
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::mul_scalar(const Tensor& a, const Tensor& s) {
    if (s.size() != 1) shape_error("mul_scalar", a, s);
    const double sv = s[0];
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * sv;
    if (!a.attached() && !s.attached()) return out;
    Node n;
    n.op = "mul_scalar";
    n.back = [a, s, sv](Tape& t, const std::vector<double>& g) {
        if (a.attached()) {
            std::vector<double> da(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] * sv;
            t.accumulate(a.node(), da.data(), da.size());
        }
        if (s.attached()) {
            double ds = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) ds += g[i] * a[i];
            t.accumulate(s.node(), &ds, 1);
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::scale(const Tensor& a, double factor) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
    if (!a.attached()) return out;
    Node n;
    n.op = "scale";
    n.back = [a, factor](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] * factor;
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::scale_rows(const Tensor& a, const Tensor& v) {
    if (v.rows() != a.rows() || v.cols() != 1) shape_error("scale_rows", a, v);
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * v[i];
    if (!a.attached() && !v.attached()) return out;
    Node n;
    n.op = "scale_rows";
    n.back = [a, v](Tape& t, const std::vector<double>& g) {
        if (a.attached()) {
            std::vector<double> da(a.size());
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < a.cols(); ++j)
                    da[i * a.cols() + j] = g[i * a.cols() + j] * v[i];
            t.accumulate(a.node(), da.data(), da.size());
        }
        if (v.attached()) {
            std::vector<double> dv(v.size(), 0.0);
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < a.cols(); ++j)
                    dv[i] += g[i * a.cols() + j] * a(i, j);
            t.accumulate(v.node(), dv.data(), dv.size());
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::runtime_error("concat_rows: no inputs");
    const std::size_t cols = parts[0].cols();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) shape_error("concat_rows", parts[0], p);
        rows += p.rows();
    }
    Tensor out(rows, cols);
    std::size_t r = 0;
    for (const auto& p : parts) {
        std::copy(p.data(), p.data() + p.size(), out.data() + r * cols);
        r += p.rows();
    }
    if (!any_attached(parts)) return out;
    std::vector<Tensor> saved(parts.begin(), parts.end());
    Node n;
    n.op = "concat_rows";
    n.back = [saved, cols](Tape& t, const std::vector<double>& g) {
        std::size_t r = 0;
        for (const auto& p : saved) {
            if (p.attached()) t.accumulate(p.node(), g.data() + r * cols, p.size());
            r += p.rows();
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::runtime_error("concat_cols: no inputs");
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) shape_error("concat_cols", parts[0], p);
        cols += p.cols();
    }
    Tensor out(rows, cols);
    std::size_t c0 = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            std::copy(p.data() + i * p.cols(), p.data() + (i + 1) * p.cols(),
                      out.data() + i * cols + c0);
        c0 += p.cols();
    }
    if (!any_attached(parts)) return out;
    std::vector<Tensor> saved(parts.begin(), parts.end());
    Node n;
    n.op = "concat_cols";
    n.back = [saved, rows, cols](Tape& t, const std::vector<double>& g) {
        std::size_t c0 = 0;
        for (const auto& p : saved) {
            if (p.attached()) {
                std::vector<double> dp(p.size());
                for (std::size_t i = 0; i < rows; ++i)
                    std::copy(g.data() + i * cols + c0, g.data() + i * cols + c0 + p.cols(),
                              dp.data() + i * p.cols());
                t.accumulate(p.node(), dp.data(), dp.size());
            }
            c0 += p.cols();
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::slice_rows(const Tensor& a, std::size_t lo, std::size_t hi) {
    if (lo > hi || hi > a.rows())
        throw std::runtime_error("slice_rows: [" + std::to_string(lo) + "," + std::to_string(hi) +
                                 ") out of range for " + a.shape_str());
    Tensor out(hi - lo, a.cols());
    std::copy(a.data() + lo * a.cols(), a.data() + hi * a.cols(), out.data());
    if (!a.attached()) return out;
    Node n;
    n.op = "slice_rows";
    n.back = [a, lo](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size(), 0.0);
        std::copy(g.begin(), g.end(), da.begin() + lo * a.cols());
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t lo, std::size_t hi) {
    if (lo > hi || hi > a.cols())
        throw std::runtime_error("slice_cols: [" + std::to_string(lo) + "," + std::to_string(hi) +
                                 ") out of range for " + a.shape_str());
    Tensor out(a.rows(), hi - lo);
    for (std::size_t i = 0; i < a.rows(); ++i)
        std::copy(a.data() + i * a.cols() + lo, a.data() + i * a.cols() + hi,
                  out.data() + i * out.cols());
    if (!a.attached()) return out;
    Node n;
    n.op = "slice_cols";
    n.back = [a, lo, hi](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size(), 0.0);
        const std::size_t w = hi - lo;
        for (std::size_t i = 0; i < a.rows(); ++i)
            std::copy(g.data() + i * w, g.data() + (i + 1) * w, da.data() + i * a.cols() + lo);
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a.size())
        throw std::runtime_error("reshape: " + a.shape_str() + " to " + std::to_string(rows) +
                                 "x" + std::to_string(cols));
    Tensor out(rows, cols, a.values());
    if (!a.attached()) return out;
    Node n;
    n.op = "reshape";
    n.back = [a](Tape& t, const std::vector<double>& g) {
        t.accumulate(a.node(), g.data(), g.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0 ? a[i] : slope * a[i];
    if (!a.attached()) return out;
    Node n;
    n.op = "leaky_relu";
    n.back = [a, slope](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] * (a[i] > 0 ? 1.0 : slope);
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::relu(const Tensor& a) { return leaky_relu(a, 0.0); }

Tensor Tape::sigmoid(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a[i]));
    if (!a.attached()) return out;
    Node n;
    n.op = "sigmoid";
    Tensor y = out;
    n.back = [a, y](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] * y[i] * (1.0 - y[i]);
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::log(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::log(a[i]);
    if (!a.attached()) return out;
    Node n;
    n.op = "log";
    n.back = [a](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] / a[i];
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

namespace {

// shared by softmax_rows and masked_softmax_rows: dX = P .* (G - rowdot(G, P))
void softmax_backward(const Tensor& p, const std::vector<double>& g, std::vector<double>& dx) {
    const std::size_t rows = p.rows(), cols = p.cols();
    dx.assign(rows * cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * p(i, j);
        for (std::size_t j = 0; j < cols; ++j)
            dx[i * cols + j] = p(i, j) * (g[i * cols + j] - dot);
    }
}

} // namespace

Tensor Tape::softmax_rows(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    kern::row_softmax(a.data(), nullptr, out.data(), a.rows(), a.cols());
    if (!a.attached()) return out;
    Node n;
    n.op = "softmax_rows";
    Tensor p = out;
    n.back = [a, p](Tape& t, const std::vector<double>& g) {
        std::vector<double> da;
        softmax_backward(p, g, da);
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::masked_softmax_rows(const Tensor& a, const Tensor& mask) {
    if (!a.same_shape(mask)) shape_error("masked_softmax_rows", a, mask);
    Tensor out(a.rows(), a.cols());
    kern::row_softmax(a.data(), mask.data(), out.data(), a.rows(), a.cols());
    if (!a.attached()) return out;
    Node n;
    n.op = "masked_softmax_rows";
    Tensor p = out;
    n.back = [a, p](Tape& t, const std::vector<double>& g) {
        std::vector<double> da;
        softmax_backward(p, g, da); // masked entries have p == 0, so da == 0 there
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::outer_sum(const Tensor& a, const Tensor& b) {
    if (a.cols() != 1 || b.cols() != 1) shape_error("outer_sum", a, b);
    Tensor out(a.rows(), b.rows());
    kern::outer_sum(a.data(), b.data(), out.data(), a.rows(), b.rows());
    if (!a.attached() && !b.attached()) return out;
    Node n;
    n.op = "outer_sum";
    n.back = [a, b](Tape& t, const std::vector<double>& g) {
        const std::size_t rows = a.rows(), cols = b.rows();
        if (a.attached()) {
            std::vector<double> da(rows, 0.0);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) da[i] += g[i * cols + j];
            t.accumulate(a.node(), da.data(), da.size());
        }
        if (b.attached()) {
            std::vector<double> db(cols, 0.0);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) db[j] += g[i * cols + j];
            t.accumulate(b.node(), db.data(), db.size());
        }
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::sum(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    Tensor out = Tensor::scalar(s);
    if (!a.attached()) return out;
    Node n;
    n.op = "sum";
    n.back = [a](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size(), g[0]);
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::row_sum(const Tensor& a) {
    Tensor out(a.rows(), 1);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j);
        out[i] = s;
    }
    if (!a.attached()) return out;
    Node n;
    n.op = "row_sum";
    n.back = [a](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) da[i * a.cols() + j] = g[i];
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::dropout(const Tensor& a, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::runtime_error("dropout: rate " + std::to_string(rate) + " outside [0,1)");
    if (!train || rate == 0.0) return a;
    // inverted scaling: kept entries are divided by the keep probability, so
    // evaluation needs no rescaling
    const double keep = 1.0 - rate;
    Tensor mask(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) mask[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * mask[i];
    if (!a.attached()) return out;
    Node n;
    n.op = "dropout";
    n.back = [a, mask](Tape& t, const std::vector<double>& g) {
        std::vector<double> da(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) da[i] = g[i] * mask[i];
        t.accumulate(a.node(), da.data(), da.size());
    };
    return attach(std::move(out), std::move(n));
}

Tensor Tape::bce_loss(const Tensor& pred, const Tensor& labels) {
    if (!pred.same_shape(labels)) shape_error("bce_loss", pred, labels);
    const std::size_t n = pred.size();
    if (n == 0) throw std::runtime_error("bce_loss: empty input");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = std::min(std::max(pred[i], kBceClamp), 1.0 - kBceClamp);
        loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    Tensor out = Tensor::scalar(loss / static_cast<double>(n));
    if (!pred.attached()) return out;
    Node node;
    node.op = "bce_loss";
    node.back = [pred, labels, n](Tape& t, const std::vector<double>& g) {
        std::vector<double> dp(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double p = pred[i];
            if (p <= kBceClamp || p >= 1.0 - kBceClamp) continue; // clamped flat
            dp[i] = g[0] * (-(labels[i] / p) + (1.0 - labels[i]) / (1.0 - p)) /
                    static_cast<double>(n);
        }
        t.accumulate(pred.node(), dp.data(), dp.size());
    };
    return attach(std::move(out), std::move(node));
}

Tensor Tape::apply(const Op& op, const std::vector<Tensor>& inputs) {
    auto want = [&](std::size_t k) {
        if (inputs.size() != k)
            throw std::runtime_error("apply: op expects " + std::to_string(k) + " inputs, got " +
                                     std::to_string(inputs.size()));
    };
    switch (op.kind) {
        case OpKind::Matmul: want(2); return matmul(inputs[0], inputs[1]);
        case OpKind::Add: want(2); return add(inputs[0], inputs[1]);
        case OpKind::Mul: want(2); return mul(inputs[0], inputs[1]);
        case OpKind::ConcatRows: return concat_rows(inputs);
        case OpKind::ConcatCols: return concat_cols(inputs);
        case OpKind::LeakyRelu: want(1); return leaky_relu(inputs[0], op.slope);
        case OpKind::Relu: want(1); return relu(inputs[0]);
        case OpKind::Sigmoid: want(1); return sigmoid(inputs[0]);
        case OpKind::SoftmaxRows: want(1); return softmax_rows(inputs[0]);
        case OpKind::Log: want(1); return log(inputs[0]);
        case OpKind::Scale: want(1); return scale(inputs[0], op.factor);
        case OpKind::Sum: want(1); return sum(inputs[0]);
        case OpKind::MaskedSoftmaxRows: want(1); return masked_softmax_rows(inputs[0], op.mask);
        case OpKind::Dropout:
            want(1);
            if (!op.rng) throw std::runtime_error("apply: dropout needs an rng");
            return dropout(inputs[0], op.rate, op.train, *op.rng);
    }
    throw std::runtime_error("apply: unknown op kind");
}

GradMap Tape::backward(const Tensor& loss) {
    if (!loss.attached())
        throw std::runtime_error("backward: loss is not attached to this tape");
    if (loss.size() != 1)
        throw std::runtime_error("backward: loss must be scalar, got " + loss.shape_str());
    grads_.assign(nodes_.size(), {});
    grad_buf(loss.node())[0] = 1.0;
    for (int id = loss.node(); id >= 0; --id) {
        if (grads_[id].empty()) continue;
        if (nodes_[id].back) nodes_[id].back(*this, grads_[id]);
    }
    GradMap out;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        if (!nodes_[id].is_leaf) continue;
        Tensor g(nodes_[id].rows, nodes_[id].cols);
        if (!grads_[id].empty())
            std::copy(grads_[id].begin(), grads_[id].end(), g.data());
        out.grads_.emplace(static_cast<int>(id), std::move(g));
    }
    clear();
    return out;
}

} // namespace crednet::ad
