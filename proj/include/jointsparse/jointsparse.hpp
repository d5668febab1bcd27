#ifndef JOINTSPARSE_JOINTSPARSE_HPP
#define JOINTSPARSE_JOINTSPARSE_HPP

#include "admm.hpp"
#include "baselines.hpp"
#include "core.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "isd.hpp"
#include "linops.hpp"
#include "metrics.hpp"
#include "multitask.hpp"
#include "rng.hpp"
#include "types.hpp"

#endif
