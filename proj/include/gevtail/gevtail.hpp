#pragma once

#include "gevtail/accumulator.hpp"
#include "gevtail/coefficients.hpp"
#include "gevtail/distributions.hpp"
#include "gevtail/errors.hpp"
#include "gevtail/estimator.hpp"
#include "gevtail/harness.hpp"
#include "gevtail/io.hpp"
#include "gevtail/mle.hpp"
#include "gevtail/random.hpp"
#include "gevtail/version.hpp"
