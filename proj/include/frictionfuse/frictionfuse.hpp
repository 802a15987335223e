#ifndef FRICTIONFUSE_FRICTIONFUSE_HPP
#define FRICTIONFUSE_FRICTIONFUSE_HPP

#include "gp.hpp"
#include "fusion.hpp"
#include "estimators.hpp"
#include "scenario.hpp"
#include "planner.hpp"
#include "plant.hpp"
#include "simulator.hpp"
#include "io.hpp"

#endif  // FRICTIONFUSE_FRICTIONFUSE_HPP
