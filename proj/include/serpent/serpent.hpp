#pragma once

#include "arm_model.hpp"
#include "coevolution.hpp"
#include "config_table.hpp"
#include "errors.hpp"
#include "es_solver.hpp"
#include "lut_controller.hpp"
#include "model_io.hpp"
#include "rng.hpp"
#include "run_config.hpp"
#include "teleop.hpp"
#include "workspace.hpp"
