#pragma once

#include "spingeom/acceptance.hpp"
#include "spingeom/bounds.hpp"
#include "spingeom/clifford.hpp"
#include "spingeom/common.hpp"
#include "spingeom/discrete.hpp"
#include "spingeom/eigensolver.hpp"
#include "spingeom/fixing.hpp"
#include "spingeom/frames.hpp"
#include "spingeom/modelspectra.hpp"
#include "spingeom/neck.hpp"
#include "spingeom/rational.hpp"
#include "spingeom/spectrum.hpp"
