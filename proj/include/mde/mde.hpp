#pragma once

#include "mde/errors.hpp"
#include "mde/rational.hpp"
#include "mde/moment_sequence.hpp"
#include "mde/series.hpp"
#include "mde/moment_derivative.hpp"
#include "mde/cauchy.hpp"
#include "mde/transforms.hpp"
#include "mde/const_coeff.hpp"
#include "mde/fractional.hpp"
