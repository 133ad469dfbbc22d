#pragma once

#include "heatflat/pde_core.hpp"
#include "heatflat/motion_planning.hpp"
#include "heatflat/control.hpp"
#include "heatflat/analysis.hpp"
#include "heatflat/scenario.hpp"
#include "heatflat/io.hpp"
