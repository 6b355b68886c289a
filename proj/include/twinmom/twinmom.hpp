#pragma once

// Umbrella header for the twin-beam photocount nonclassicality toolkit.

#include "analyze.hpp"
#include "bootstrap.hpp"
#include "core.hpp"
#include "criteria.hpp"
#include "data.hpp"
#include "moments.hpp"
#include "ncd.hpp"
#include "optim.hpp"
#include "reconstruct.hpp"
#include "rng.hpp"
#include "selfcheck.hpp"
#include "simulate.hpp"
#include "stirling.hpp"
