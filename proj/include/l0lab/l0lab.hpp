#pragma once

#include "l0lab/attack.hpp"
#include "l0lab/classify.hpp"
#include "l0lab/errors.hpp"
#include "l0lab/experiment.hpp"
#include "l0lab/model.hpp"
#include "l0lab/noise.hpp"
#include "l0lab/normal.hpp"
#include "l0lab/polynomial.hpp"
#include "l0lab/quadrature.hpp"
#include "l0lab/random.hpp"
#include "l0lab/sampler.hpp"
