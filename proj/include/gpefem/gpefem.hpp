#pragma once

#include "gpefem/error.hpp"
#include "gpefem/log.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/quadrature.hpp"
#include "gpefem/model.hpp"
#include "gpefem/linear_solver.hpp"
#include "gpefem/assembly.hpp"
#include "gpefem/regularizer.hpp"
#include "gpefem/newton.hpp"
#include "gpefem/diagnostics.hpp"
#include "gpefem/steppers.hpp"
#include "gpefem/groundstate.hpp"
#include "gpefem/verification.hpp"
#include "gpefem/config.hpp"
