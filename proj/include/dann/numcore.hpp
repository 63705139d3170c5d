#pragma once

#include "dann/numcore/adam.hpp"
#include "dann/numcore/checkpoint.hpp"
#include "dann/numcore/gradcheck.hpp"
#include "dann/numcore/graph.hpp"
#include "dann/numcore/params.hpp"
#include "dann/numcore/rng.hpp"
#include "dann/numcore/tensor.hpp"
