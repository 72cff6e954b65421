// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

#include "mtdfl/tensorkit/core.hpp"

namespace mtdfl::tk {

/// Largest per-coordinate relative error between `analytic` and central
/// differences of `loss` around `params`. Denominators are floored at
/// `floor` so coordinates with vanishing gradient compare absolutely.
template <typename Scalar, typename LossFn>
Scalar grad_check(Vec<Scalar> params, LossFn&& loss, const Vec<Scalar>& analytic, Scalar h = Scalar(1e-5),
                  Scalar floor = Scalar(1e-6)) {
  if (analytic.size() != params.size()) throw ShapeError("grad_check: gradient length mismatch");
  Scalar worst(0);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const Scalar keep = params[i];
    params[i] = keep + h;
    const Scalar up = loss(params);
    params[i] = keep - h;
    const Scalar down = loss(params);
    params[i] = keep;
    const Scalar numeric = (up - down) / (Scalar(2) * h);
    const Scalar denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace mtdfl::tk
