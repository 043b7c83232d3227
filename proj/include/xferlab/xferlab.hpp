#pragma once

#include "xferlab/errors.hpp"
#include "xferlab/rng.hpp"
#include "xferlab/statespace.hpp"
#include "xferlab/transferop.hpp"
#include "xferlab/pathmeasure.hpp"
#include "xferlab/solenoid.hpp"
#include "xferlab/wavelet.hpp"
#include "xferlab/graphwalk.hpp"
