#pragma once

#include "common.hpp"
#include "fft.hpp"
#include "numerology.hpp"
#include "cpofdm.hpp"
#include "specwin.hpp"
#include "fcfb.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "scenario_io.hpp"
#include "export.hpp"
