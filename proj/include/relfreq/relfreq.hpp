#pragma once

#include "relfreq/component_mask.hpp"
#include "relfreq/cutset_engine.hpp"
#include "relfreq/dnf_estimator.hpp"
#include "relfreq/error.hpp"
#include "relfreq/estimate.hpp"
#include "relfreq/exact_oracle.hpp"
#include "relfreq/frequency_approx.hpp"
#include "relfreq/mc_baseline.hpp"
#include "relfreq/network_io.hpp"
#include "relfreq/random.hpp"
#include "relfreq/report.hpp"
#include "relfreq/system_model.hpp"
