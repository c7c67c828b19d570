#pragma once

#include "sbc/types.hpp"
#include "sbc/nbody.hpp"
#include "sbc/spectral.hpp"
#include "sbc/collinear.hpp"
#include "sbc/continuation.hpp"
#include "sbc/branch_io.hpp"
#include "sbc/scenarios.hpp"
