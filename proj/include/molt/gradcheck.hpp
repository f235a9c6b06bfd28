#pragma once

#include <functional>

#include "molt/tape.hpp"

namespace molt {

// Central finite-difference check of a scalar objective against the tape's
// analytic gradients.
//
// `forward` must rebuild the computation from the store's current values
// and return the scalar loss; when its argument is non-null it must also
// run backward() on that tape so parameter grads land in the store. Every
// tunable scalar is perturbed by +/-h; the reported figure is
// max |analytic - numeric| / max(1, |numeric|).
double finite_diff_check(ParamStore& store, const std::function<double(Tape*)>& forward, double h = 1e-5);

}  // namespace molt
