#pragma once

// Kernel-score calibration toolkit: differentiable simulation of G/G/1
// waiting times, kernel score minimization with projected Adam, and sandwich
// confidence sets for the calibrated parameters.

#include "kscal/builtins.hpp"
#include "kscal/calibrate.hpp"
#include "kscal/chi_square.hpp"
#include "kscal/confidence.hpp"
#include "kscal/config.hpp"
#include "kscal/data.hpp"
#include "kscal/dual.hpp"
#include "kscal/errors.hpp"
#include "kscal/experiment.hpp"
#include "kscal/io.hpp"
#include "kscal/kernel.hpp"
#include "kscal/parallel.hpp"
#include "kscal/param.hpp"
#include "kscal/queueing.hpp"
#include "kscal/rng.hpp"
#include "kscal/sandwich.hpp"
#include "kscal/score.hpp"
#include "kscal/sym_matrix.hpp"
