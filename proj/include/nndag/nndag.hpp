#pragma once

#include "nndag/acyclicity.hpp"
#include "nndag/errors.hpp"
#include "nndag/experiments.hpp"
#include "nndag/graph.hpp"
#include "nndag/matrix_io.hpp"
#include "nndag/metrics.hpp"
#include "nndag/result.hpp"
#include "nndag/rng.hpp"
#include "nndag/score.hpp"
#include "nndag/solver.hpp"
