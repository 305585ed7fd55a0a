#pragma once

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/special.hpp"
#include "minimaxcdf/quadrature.hpp"
#include "minimaxcdf/model.hpp"
#include "minimaxcdf/nomination.hpp"
#include "minimaxcdf/estimator.hpp"
#include "minimaxcdf/rng.hpp"
#include "minimaxcdf/sampling.hpp"
#include "minimaxcdf/risk.hpp"
#include "minimaxcdf/serialize.hpp"
