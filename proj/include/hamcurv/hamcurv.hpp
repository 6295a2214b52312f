#ifndef HAMCURV_HAMCURV_HPP
#define HAMCURV_HAMCURV_HPP

// Umbrella header.

#include "hamcurv/curvature.hpp"
#include "hamcurv/exprdsl.hpp"
#include "hamcurv/flow.hpp"
#include "hamcurv/hyperbolicity.hpp"
#include "hamcurv/jet.hpp"
#include "hamcurv/models.hpp"
#include "hamcurv/ode.hpp"
#include "hamcurv/scenario.hpp"

#endif
