#pragma once

// Umbrella header. config.hpp is excluded: it pulls in the vendored JSON
// parser, which not every consumer wants on its include path.

#include "calibration.hpp"
#include "io.hpp"
#include "losses.hpp"
#include "mirror.hpp"
#include "quad.hpp"
#include "risk.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "simplex.hpp"
#include "study.hpp"
