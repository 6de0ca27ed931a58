#pragma once

// Factor tree copula models for ordinal item-response data: exact pmf
// evaluation, two-step IFM estimation, vine-tree and copula-family model
// selection, diagnostics, and simulation.

#include "ftcop/copula.hpp"
#include "ftcop/data.hpp"
#include "ftcop/diagnose.hpp"
#include "ftcop/estimate.hpp"
#include "ftcop/likelihood.hpp"
#include "ftcop/model.hpp"
#include "ftcop/quadrature.hpp"
#include "ftcop/select.hpp"
#include "ftcop/simulate.hpp"
