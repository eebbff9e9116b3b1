#pragma once

#include "smashy/archive.hpp"
#include "smashy/baselines.hpp"
#include "smashy/error.hpp"
#include "smashy/harness.hpp"
#include "smashy/log.hpp"
#include "smashy/metaopt.hpp"
#include "smashy/objective.hpp"
#include "smashy/objectives.hpp"
#include "smashy/optimizer.hpp"
#include "smashy/param_space.hpp"
#include "smashy/regret.hpp"
#include "smashy/rng.hpp"
#include "smashy/sampler.hpp"
#include "smashy/surrogate.hpp"
