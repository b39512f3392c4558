#pragma once

#include "locos/analysis.hpp"
#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/function.hpp"
#include "locos/gundy.hpp"
#include "locos/local_space.hpp"
#include "locos/measure_space.hpp"
#include "locos/nonbinary.hpp"
#include "locos/numerics.hpp"
#include "locos/orthosystem.hpp"
#include "locos/parallel.hpp"
#include "locos/piecewise.hpp"
#include "locos/projector_bounds.hpp"
#include "locos/quadrature.hpp"
#include "locos/random.hpp"
#include "locos/support.hpp"
#include "locos/tensor2d.hpp"
