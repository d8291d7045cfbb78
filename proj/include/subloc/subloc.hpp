#pragma once

#include "subloc/convex.hpp"
#include "subloc/errors.hpp"
#include "subloc/experiment.hpp"
#include "subloc/io.hpp"
#include "subloc/linalg.hpp"
#include "subloc/localize.hpp"
#include "subloc/model.hpp"
#include "subloc/reduction.hpp"
#include "subloc/rng.hpp"
#include "subloc/search.hpp"
