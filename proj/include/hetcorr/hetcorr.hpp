#pragma once

// Umbrella header for the numerical library (no CLI, no network).

#include "hetcorr/baselines.hpp"
#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"
#include "hetcorr/dates.hpp"
#include "hetcorr/errors.hpp"
#include "hetcorr/fused_lasso.hpp"
#include "hetcorr/random.hpp"
#include "hetcorr/selection.hpp"
#include "hetcorr/simulation.hpp"
#include "hetcorr/spline.hpp"
#include "hetcorr/transforms.hpp"
#include "hetcorr/tv.hpp"
#include "hetcorr/version.hpp"
