#pragma once

#include "fks/basis.hpp"
#include "fks/cluster.hpp"
#include "fks/error.hpp"
#include "fks/experiment.hpp"
#include "fks/freeknot.hpp"
#include "fks/ingest.hpp"
#include "fks/io.hpp"
#include "fks/lambda_select.hpp"
#include "fks/metrics.hpp"
#include "fks/penalty.hpp"
#include "fks/simulate.hpp"
#include "fks/smoother.hpp"
