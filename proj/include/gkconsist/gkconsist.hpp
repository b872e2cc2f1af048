#pragma once

#include "gkconsist/errors.hpp"
#include "gkconsist/estimators.hpp"
#include "gkconsist/harness.hpp"
#include "gkconsist/kernel_core.hpp"
#include "gkconsist/scenario_io.hpp"
#include "gkconsist/spectral.hpp"
#include "gkconsist/synthesis.hpp"
