#pragma once

#include "qcf/lattice.hpp"
#include "qcf/potential.hpp"
#include "qcf/chain.hpp"
#include "qcf/operators.hpp"
#include "qcf/stability.hpp"
#include "qcf/solver.hpp"
#include "qcf/fit.hpp"
#include "qcf/parallel.hpp"
#include "qcf/report_io.hpp"
