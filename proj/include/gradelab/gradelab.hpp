#pragma once

// Everything except serialization.hpp and workbench.hpp, which also need the
// vendored json.hpp on the include path.

#include "gradelab/error.hpp"
#include "gradelab/region.hpp"
#include "gradelab/car.hpp"
#include "gradelab/linalg.hpp"
#include "gradelab/interaction.hpp"
#include "gradelab/state.hpp"
#include "gradelab/entropy.hpp"
#include "gradelab/stability.hpp"
#include "gradelab/symmetry.hpp"
