#pragma once

#include "grassfield/errors.hpp"
#include "grassfield/linalg.hpp"
#include "grassfield/grassmann.hpp"
#include "grassfield/snapshot.hpp"
#include "grassfield/snapshot_io.hpp"
#include "grassfield/mesh.hpp"
#include "grassfield/interpolation.hpp"
#include "grassfield/models.hpp"
#include "grassfield/exchange.hpp"
#include "grassfield/refinement.hpp"
#include "grassfield/compare.hpp"
