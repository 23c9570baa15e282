#pragma once

// Worst-case capacity of discrete memoryless channels under channel-law
// uncertainty: saddle-point solver, proximal operators, closed-form oracles
// and benchmark scenario drivers.

#include "rcc/channel.hpp"
#include "rcc/cost.hpp"
#include "rcc/generators.hpp"
#include "rcc/json_io.hpp"
#include "rcc/oracles.hpp"
#include "rcc/prox.hpp"
#include "rcc/rng.hpp"
#include "rcc/scenario.hpp"
#include "rcc/sets.hpp"
#include "rcc/solver.hpp"
