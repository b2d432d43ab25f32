#pragma once

#include "cohwork/config.hpp"
#include "cohwork/entropy.hpp"
#include "cohwork/errors.hpp"
#include "cohwork/experiment.hpp"
#include "cohwork/fcs.hpp"
#include "cohwork/ising.hpp"
#include "cohwork/linalg.hpp"
#include "cohwork/quasidist.hpp"
#include "cohwork/spectral.hpp"
#include "cohwork/state.hpp"
#include "cohwork/table.hpp"
#include "cohwork/version.hpp"
