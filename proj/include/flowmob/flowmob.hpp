#pragma once

#include "flowmob/analytical.hpp"
#include "flowmob/core.hpp"
#include "flowmob/error.hpp"
#include "flowmob/experiment.hpp"
#include "flowmob/handover.hpp"
#include "flowmob/hnbp.hpp"
#include "flowmob/prefix.hpp"
#include "flowmob/scenario.hpp"
#include "flowmob/sim.hpp"
