/// @file nematic.hpp
/// @brief Umbrella header for the whole library.
#pragma once

#include "nematic/error.hpp"
#include "nematic/grid.hpp"
#include "nematic/fields.hpp"
#include "nematic/operators.hpp"
#include "nematic/field_ops.hpp"
#include "nematic/physics.hpp"
#include "nematic/state.hpp"
#include "nematic/lifting.hpp"
#include "nematic/energy.hpp"
#include "nematic/linearized.hpp"
#include "nematic/control.hpp"
#include "nematic/cost.hpp"
#include "nematic/adjoint.hpp"
#include "nematic/optimize.hpp"
#include "nematic/scenarios.hpp"
#include "nematic/verification.hpp"
#include "nematic/io.hpp"
#include "nematic/config.hpp"
#include "nematic/cli.hpp"
