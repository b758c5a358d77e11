#pragma once

#include "prli/analysis.hpp"
#include "prli/config.hpp"
#include "prli/cost.hpp"
#include "prli/errors.hpp"
#include "prli/experiment.hpp"
#include "prli/hybrid.hpp"
#include "prli/io.hpp"
#include "prli/oracle.hpp"
#include "prli/optimizers.hpp"
#include "prli/plant.hpp"
#include "prli/sampling.hpp"
#include "prli/upe.hpp"
#include "prli/verify.hpp"
