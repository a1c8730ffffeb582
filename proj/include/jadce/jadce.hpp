#pragma once

// Group-sparse recovery for joint activity detection and channel estimation:
// classical proximal solvers, three unrolled learned variants with
// hand-derived gradients, coherence-minimizing analysis weights, and
// executable convergence-theory checks.

#include "jadce/adam.hpp"
#include "jadce/blob_io.hpp"
#include "jadce/coherence_weights.hpp"
#include "jadce/config.hpp"
#include "jadce/dataset.hpp"
#include "jadce/metrics.hpp"
#include "jadce/nets.hpp"
#include "jadce/operators.hpp"
#include "jadce/parallel.hpp"
#include "jadce/rng.hpp"
#include "jadce/signal_model.hpp"
#include "jadce/solvers.hpp"
#include "jadce/theory_checks.hpp"
#include "jadce/training.hpp"
#include "jadce/types.hpp"
