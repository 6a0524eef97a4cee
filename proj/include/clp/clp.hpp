#pragma once

// Conformal link prediction with FDR control: the whole library.

#include "clp/error.hpp"
#include "clp/rng.hpp"
#include "clp/network.hpp"
#include "clp/generators.hpp"
#include "clp/split.hpp"
#include "clp/estimator.hpp"
#include "clp/conformal.hpp"
#include "clp/parallel.hpp"
#include "clp/evalues.hpp"
#include "clp/topology.hpp"
#include "clp/bench.hpp"
#include "clp/io.hpp"
