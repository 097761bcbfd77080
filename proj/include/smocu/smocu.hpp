#pragma once

#include "benchmarks.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "gp.hpp"
#include "harness.hpp"
#include "mocu.hpp"
#include "problem.hpp"
#include "refinement.hpp"
#include "seeding.hpp"
