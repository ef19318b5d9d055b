#pragma once

#include "fgpr/covariance.hpp"
#include "fgpr/errors.hpp"
#include "fgpr/fem1d.hpp"
#include "fgpr/fgp.hpp"
#include "fgpr/hyperopt.hpp"
#include "fgpr/linalg.hpp"
#include "fgpr/oracles.hpp"
#include "fgpr/problem.hpp"
#include "fgpr/sgp.hpp"
#include "fgpr/types.hpp"
