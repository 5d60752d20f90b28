#pragma once

#include "prextra/algorithms.hpp"
#include "prextra/io.hpp"
#include "prextra/metrics.hpp"
#include "prextra/network.hpp"
#include "prextra/problems.hpp"
#include "prextra/regularizer.hpp"
#include "prextra/runner.hpp"
#include "prextra/stiefel.hpp"
#include "prextra/tangent_prox.hpp"
#include "prextra/types.hpp"
