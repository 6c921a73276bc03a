#pragma once

// Umbrella header for the whole library.

#include "silab/checkpoint.hpp"
#include "silab/config.hpp"
#include "silab/csv.hpp"
#include "silab/dataset.hpp"
#include "silab/elr.hpp"
#include "silab/errors.hpp"
#include "silab/group_layout.hpp"
#include "silab/grouped_params.hpp"
#include "silab/harness.hpp"
#include "silab/idx.hpp"
#include "silab/instrumentation.hpp"
#include "silab/invariance.hpp"
#include "silab/linalg.hpp"
#include "silab/mlp.hpp"
#include "silab/objective.hpp"
#include "silab/optimizer.hpp"
#include "silab/rng.hpp"
#include "silab/toy.hpp"
#include "silab/trainer.hpp"
