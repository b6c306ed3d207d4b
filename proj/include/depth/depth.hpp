#pragma once

// Umbrella header for the data-depth anomaly detection library.

#include "depth/bench.hpp"
#include "depth/core.hpp"
#include "depth/depths.hpp"
#include "depth/detect.hpp"
#include "depth/explain.hpp"
#include "depth/io.hpp"
#include "depth/optimize.hpp"
#include "depth/parallel.hpp"
#include "depth/rng.hpp"
#include "depth/robust_stats.hpp"
