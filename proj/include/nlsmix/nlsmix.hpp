#pragma once

// Everything at once. Individual headers can be included on their own.

#include "nlsmix/errors.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/radial.hpp"
#include "nlsmix/ode.hpp"
#include "nlsmix/shooting.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/criteria.hpp"
#include "nlsmix/fiber.hpp"
#include "nlsmix/solvers.hpp"
#include "nlsmix/wave.hpp"
#include "nlsmix/dynamics.hpp"
#include "nlsmix/io.hpp"
#include "nlsmix/cli.hpp"
