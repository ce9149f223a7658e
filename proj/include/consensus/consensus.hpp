#pragma once

// Umbrella header: consensus dynamics on weighted influence digraphs, in
// both the averaging-ODE and jump-process readings, plus the structural
// analysis connecting the two.

#include <consensus/common.hpp>
#include <consensus/control.hpp>
#include <consensus/decomposition.hpp>
#include <consensus/deterministic.hpp>
#include <consensus/experiment.hpp>
#include <consensus/graph.hpp>
#include <consensus/io.hpp>
#include <consensus/rng.hpp>
#include <consensus/scenarios.hpp>
#include <consensus/spectral.hpp>
#include <consensus/stochastic.hpp>
