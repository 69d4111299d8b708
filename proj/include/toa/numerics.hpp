#pragma once

#include "toa/numerics/lobatto.hpp"
#include "toa/numerics/quadrature.hpp"
#include "toa/numerics/special.hpp"
#include "toa/numerics/summation.hpp"
