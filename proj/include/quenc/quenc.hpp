#pragma once

#include "quenc/analysis.hpp"
#include "quenc/ansatz.hpp"
#include "quenc/constraints.hpp"
#include "quenc/errors.hpp"
#include "quenc/experiments.hpp"
#include "quenc/gradient.hpp"
#include "quenc/hybrid.hpp"
#include "quenc/io.hpp"
#include "quenc/objective.hpp"
#include "quenc/parallel.hpp"
#include "quenc/problem.hpp"
#include "quenc/record.hpp"
#include "quenc/rng.hpp"
#include "quenc/statevector.hpp"
#include "quenc/training.hpp"
#include "quenc/version.hpp"
