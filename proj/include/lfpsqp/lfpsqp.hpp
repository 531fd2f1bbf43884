#pragma once
#ifndef LFPSQP_LFPSQP_HPP
#define LFPSQP_LFPSQP_HPP

#include "lfpsqp/types.hpp"
#include "lfpsqp/dual.hpp"
#include "lfpsqp/deriv.hpp"
#include "lfpsqp/problem.hpp"
#include "lfpsqp/factor.hpp"
#include "lfpsqp/direction.hpp"
#include "lfpsqp/retract.hpp"
#include "lfpsqp/linesearch.hpp"
#include "lfpsqp/trace.hpp"
#include "lfpsqp/solver.hpp"
#include "lfpsqp/bench.hpp"
#include "lfpsqp/oracle.hpp"

#endif  // LFPSQP_LFPSQP_HPP
