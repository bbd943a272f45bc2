// Umbrella header.

#pragma once

#include "defuse/baselines.hpp"
#include "defuse/candidates.hpp"
#include "defuse/evaluation.hpp"
#include "defuse/feature_io.hpp"
#include "defuse/geodesic.hpp"
#include "defuse/geometry.hpp"
#include "defuse/ocsvm.hpp"
#include "defuse/pipeline.hpp"
#include "defuse/synth.hpp"
