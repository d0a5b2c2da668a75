#include "crednet/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crednet::ad {

namespace {

double eval(const ScalarFn& f, const std::vector<Tensor>& params) {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p));
    Tensor loss = f(tape, leaves);
    if (loss.size() != 1)
        throw std::runtime_error("grad_check: function must return a scalar");
    return loss.item();
}

} // namespace

double grad_check(const ScalarFn& f, const std::vector<Tensor>& params, double epsilon) {
    if (epsilon <= 0.0) throw std::runtime_error("grad_check: epsilon must be > 0");

    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p));
    Tensor loss = f(tape, leaves);
    if (loss.size() != 1)
        throw std::runtime_error("grad_check: function must return a scalar");
    GradMap grads = tape.backward(loss);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const Tensor& analytic = grads.at(leaves[pi]);
        for (std::size_t c = 0; c < params[pi].size(); ++c) {
            std::vector<Tensor> bumped = params;
            Tensor plus(params[pi].rows(), params[pi].cols(), params[pi].values());
            plus[c] += epsilon;
            bumped[pi] = plus;
            double fp = eval(f, bumped);
            Tensor minus(params[pi].rows(), params[pi].cols(), params[pi].values());
            minus[c] -= epsilon;
            bumped[pi] = minus;
            double fm = eval(f, bumped);
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("grad_check: non-finite function value at param " +
                                         std::to_string(pi) + " coord " + std::to_string(c));
            double fd = (fp - fm) / (2.0 * epsilon);
            double a = analytic[c];
            double err = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1.0});
            if (err > worst) worst = err;
        }
    }
    return worst;
}

} // namespace crednet::ad
