#pragma once

#include "billiard.hpp"
#include "crosscheck.hpp"
#include "cusp.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "tangent.hpp"
