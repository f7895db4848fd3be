#pragma once

#include "ugraph/adam.hpp"
#include "ugraph/error.hpp"
#include "ugraph/gnn.hpp"
#include "ugraph/graph.hpp"
#include "ugraph/harness.hpp"
#include "ugraph/matrix.hpp"
#include "ugraph/model.hpp"
#include "ugraph/parallel.hpp"
#include "ugraph/poison.hpp"
#include "ugraph/training.hpp"
#include "ugraph/tu_format.hpp"
