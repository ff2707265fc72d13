#pragma once

#include "cellsleep/bayes_tuner.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/orchestrator.hpp"
#include "cellsleep/power_model.hpp"
#include "cellsleep/run_log_io.hpp"
#include "cellsleep/scenario.hpp"
#include "cellsleep/shutdown_policy.hpp"
#include "cellsleep/traffic_sim.hpp"
#include "cellsleep/window_split.hpp"
