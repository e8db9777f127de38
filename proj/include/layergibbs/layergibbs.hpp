#pragma once

#include "box.hpp"
#include "convergence.hpp"
#include "decimation.hpp"
#include "enumerate.hpp"
#include "estimate.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "lattice.hpp"
#include "mc.hpp"
#include "potentials.hpp"
#include "stats.hpp"
#include "thermo.hpp"
#include "transfer.hpp"
