#pragma once

#include "saist/core.hpp"
#include "saist/linalg.hpp"
#include "saist/petc_model.hpp"
#include "saist/cone.hpp"
#include "saist/smt.hpp"
#include "saist/cone_oracle.hpp"
#include "saist/quantgraph.hpp"
#include "saist/abstraction.hpp"
#include "saist/cycle_verify.hpp"
#include "saist/fixtures.hpp"
#include "saist/driver.hpp"
