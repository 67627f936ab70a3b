#pragma once

#include "symform/analysis.hpp"
#include "symform/dynamics.hpp"
#include "symform/error.hpp"
#include "symform/laplacian.hpp"
#include "symform/piecewise.hpp"
#include "symform/scenario.hpp"
#include "symform/symmetry.hpp"
