#ifndef DIFFCORR_DIFFCORR_HPP
#define DIFFCORR_DIFFCORR_HPP

#include "core.hpp"
#include "cross_validation.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "hypothesis_test.hpp"
#include "io.hpp"
#include "moments.hpp"
#include "norms.hpp"
#include "simulation.hpp"
#include "thresholding.hpp"

#endif
