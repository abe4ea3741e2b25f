#pragma once

/// @file adiabatic.hpp
/// @brief Umbrella header.

#include "core.hpp"
#include "model.hpp"
#include "spectrum.hpp"
#include "frame.hpp"
#include "propagate.hpp"
#include "perturb.hpp"
#include "fourier.hpp"
