#pragma once

#include "arrival_search.hpp"
#include "config.hpp"
#include "control_sim.hpp"
#include "disturbance.hpp"
#include "experiment.hpp"
#include "grid.hpp"
#include "io/csv.hpp"
#include "io/pgm.hpp"
#include "maps.hpp"
#include "orbit.hpp"
#include "safe_set.hpp"
#include "safety_solver.hpp"
#include "state.hpp"
