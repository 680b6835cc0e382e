#pragma once

#include "cf_core.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "farey_dynamics.hpp"
#include "induced.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "rational.hpp"
#include "regions.hpp"
#include "sampling.hpp"
