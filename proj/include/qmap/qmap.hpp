#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "parallel.hpp"
#include "quantize.hpp"
#include "tuple.hpp"
#include "sources.hpp"
#include "empirics.hpp"
#include "projection.hpp"
#include "sensing.hpp"
#include "solver.hpp"
#include "validation.hpp"
