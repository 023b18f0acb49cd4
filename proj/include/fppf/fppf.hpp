#pragma once

#include "fppf/errors.hpp"
#include "fppf/linalg.hpp"
#include "fppf/network.hpp"
#include "fppf/incidence.hpp"
#include "fppf/stiffness.hpp"
#include "fppf/fixed_point.hpp"
#include "fppf/solvability.hpp"
#include "fppf/oracle.hpp"
#include "fppf/case_io.hpp"
