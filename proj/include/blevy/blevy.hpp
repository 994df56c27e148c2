#pragma once

// Umbrella header.
#include "blevy/config.hpp"
#include "blevy/error.hpp"
#include "blevy/format.hpp"
#include "blevy/levy.hpp"
#include "blevy/model.hpp"
#include "blevy/oracle.hpp"
#include "blevy/presets.hpp"
#include "blevy/report.hpp"
#include "blevy/rng.hpp"
#include "blevy/sim.hpp"
#include "blevy/stats.hpp"
#include "blevy/summation.hpp"
