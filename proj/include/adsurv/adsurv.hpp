#pragma once

#include "adsurv/errors.hpp"
#include "adsurv/numerics.hpp"
#include "adsurv/surv_core.hpp"
#include "adsurv/combo_test.hpp"
#include "adsurv/cond_error.hpp"
#include "adsurv/wiener_bound.hpp"
#include "adsurv/sim_engine.hpp"
#include "adsurv/scenario_io.hpp"
