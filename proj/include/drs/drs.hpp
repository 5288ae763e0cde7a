#pragma once

#include "drs/analysis.hpp"
#include "drs/assembly.hpp"
#include "drs/diagnostics.hpp"
#include "drs/error.hpp"
#include "drs/fixtures.hpp"
#include "drs/mesh.hpp"
#include "drs/rational.hpp"
#include "drs/solver.hpp"
#include "drs/surface.hpp"
#include "drs/theta.hpp"
