#pragma once

#include "nlvi/errors.hpp"
#include "nlvi/kernels.hpp"
#include "nlvi/quadrature.hpp"
#include "nlvi/grid.hpp"
#include "nlvi/assembly.hpp"
#include "nlvi/linear.hpp"
#include "nlvi/obstacle.hpp"
#include "nlvi/analysis.hpp"
