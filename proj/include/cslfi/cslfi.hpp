#pragma once

#include "cslfi/config.hpp"
#include "cslfi/constants.hpp"
#include "cslfi/csl.hpp"
#include "cslfi/dynamics.hpp"
#include "cslfi/errors.hpp"
#include "cslfi/estimation.hpp"
#include "cslfi/gaussian.hpp"
#include "cslfi/parallel.hpp"
#include "cslfi/scenario.hpp"
#include "cslfi/version.hpp"
