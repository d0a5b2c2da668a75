#pragma once

#include <functional>
#include <vector>

#include "crednet/tape.hpp"

namespace crednet::ad {

// A deterministic scalar function of a parameter list. The callable must
// build the computation on the provided tape from the already-attached
// leaves it is given.
using ScalarFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Compares backward() against central finite differences coordinate-wise
// and returns the worst relative error, where relative error is
// |a - b| / max(|a|, |b|, 1). epsilon must be > 0; the function must be
// deterministic (dropout disabled).
double grad_check(const ScalarFn& f, const std::vector<Tensor>& params, double epsilon);

} // namespace crednet::ad
