#pragma once

// Umbrella header for the algorithm library. The JSON config and trace
// helpers under dsg/io/ additionally need nlohmann/json.

#include "dsg/core.hpp"
#include "dsg/deflected_subgradient.hpp"
#include "dsg/error.hpp"
#include "dsg/penalties.hpp"
#include "dsg/problems.hpp"
#include "dsg/subsolver.hpp"
#include "dsg/verify.hpp"
