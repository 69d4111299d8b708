#pragma once

#include "toa/analysis.hpp"
#include "toa/closedform.hpp"
#include "toa/dynamics.hpp"
#include "toa/error.hpp"
#include "toa/figures.hpp"
#include "toa/format.hpp"
#include "toa/grid.hpp"
#include "toa/numerics.hpp"
#include "toa/parallel.hpp"
#include "toa/report.hpp"
#include "toa/states.hpp"
