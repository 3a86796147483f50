#pragma once

#include "sflpon/aggregation.hpp"
#include "sflpon/config.hpp"
#include "sflpon/core.hpp"
#include "sflpon/orchestrator.hpp"
#include "sflpon/ponsim.hpp"
#include "sflpon/reporting.hpp"
#include "sflpon/rng.hpp"
#include "sflpon/training.hpp"
