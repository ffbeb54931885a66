#pragma once
// Everything except the command-line front end.

#include "bellbox/analysis.hpp"
#include "bellbox/canonical.hpp"
#include "bellbox/error.hpp"
#include "bellbox/format.hpp"
#include "bellbox/models.hpp"
#include "bellbox/number.hpp"
#include "bellbox/quantum.hpp"
#include "bellbox/random.hpp"
#include "bellbox/sampler.hpp"
#include "bellbox/scenario.hpp"
#include "bellbox/simplex.hpp"
