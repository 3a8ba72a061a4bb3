#pragma once

#include "grover/errors.hpp"
#include "grover/fock.hpp"
#include "grover/elements.hpp"
#include "grover/interferometers.hpp"
#include "grover/spectral.hpp"
#include "grover/inversion.hpp"
#include "grover/sagnac.hpp"
