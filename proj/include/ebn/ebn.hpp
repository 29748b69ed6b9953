#pragma once

#include "ebn/config.hpp"
#include "ebn/csv.hpp"
#include "ebn/error.hpp"
#include "ebn/experiments.hpp"
#include "ebn/hwmodel.hpp"
#include "ebn/metrics.hpp"
#include "ebn/network.hpp"
#include "ebn/rng.hpp"
#include "ebn/signals.hpp"
#include "ebn/types.hpp"
