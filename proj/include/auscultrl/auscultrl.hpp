#pragma once

#include "checkpoint.hpp"
#include "cohort.hpp"
#include "dqn.hpp"
#include "environment.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "features.hpp"
#include "metrics.hpp"
#include "mini_env.hpp"
#include "qnet.hpp"
#include "random.hpp"
#include "raster.hpp"
#include "replay.hpp"
#include "session.hpp"
#include "value_iteration.hpp"
