#pragma once

#include "emrm/rational.hpp"
#include "emrm/moment_model.hpp"
#include "emrm/partitions.hpp"
#include "emrm/trace_graph.hpp"
#include "emrm/limit_calculus.hpp"
#include "emrm/exact_oracle.hpp"
#include "emrm/random.hpp"
#include "emrm/parallel.hpp"
#include "emrm/ensembles.hpp"
#include "emrm/estimator.hpp"
#include "emrm/report.hpp"
#include "emrm/io.hpp"
#include "emrm/cli.hpp"
