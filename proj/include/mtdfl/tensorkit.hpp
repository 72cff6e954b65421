// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mtdfl/tensorkit/checkpoint.hpp"
#include "mtdfl/tensorkit/core.hpp"
#include "mtdfl/tensorkit/dense.hpp"
#include "mtdfl/tensorkit/gradcheck.hpp"
#include "mtdfl/tensorkit/loss.hpp"
#include "mtdfl/tensorkit/optim.hpp"
#include "mtdfl/tensorkit/recurrent.hpp"
