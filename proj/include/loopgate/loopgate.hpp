#pragma once

#include "loopgate/align.hpp"
#include "loopgate/errors.hpp"
#include "loopgate/evaluation.hpp"
#include "loopgate/experiment.hpp"
#include "loopgate/geometry.hpp"
#include "loopgate/io/candidates_csv.hpp"
#include "loopgate/io/g2o.hpp"
#include "loopgate/io/text.hpp"
#include "loopgate/io/tum.hpp"
#include "loopgate/io/verdict_csv.hpp"
#include "loopgate/pose_graph.hpp"
#include "loopgate/report.hpp"
#include "loopgate/simulator.hpp"
#include "loopgate/solver.hpp"
#include "loopgate/verifier.hpp"
