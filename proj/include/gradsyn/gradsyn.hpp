#pragma once

// Umbrella header.

#include "gradsyn/baselines.hpp"
#include "gradsyn/bench.hpp"
#include "gradsyn/errors.hpp"
#include "gradsyn/evaluation.hpp"
#include "gradsyn/gradient.hpp"
#include "gradsyn/graph.hpp"
#include "gradsyn/models.hpp"
#include "gradsyn/molecule.hpp"
#include "gradsyn/params.hpp"
#include "gradsyn/planner.hpp"
#include "gradsyn/reaction_file.hpp"
#include "gradsyn/route.hpp"
#include "gradsyn/serialize.hpp"
#include "gradsyn/svalue.hpp"
