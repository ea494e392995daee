#pragma once

// Umbrella header.

#include "bmv/common.hpp"
#include "bmv/derivs.hpp"
#include "bmv/exterior.hpp"
#include "bmv/harness.hpp"
#include "bmv/laplace.hpp"
#include "bmv/matcore.hpp"
#include "bmv/matrix_io.hpp"
#include "bmv/rat_matrix.hpp"
#include "bmv/rational.hpp"
#include "bmv/report.hpp"
#include "bmv/sampling.hpp"
#include "bmv/tolerances.hpp"
#include "bmv/words.hpp"
