#pragma once

#include "lcx/core_data.hpp"
#include "lcx/error.hpp"
#include "lcx/euclidean_convexity.hpp"
#include "lcx/graph_convexity.hpp"
#include "lcx/neighbor_graph.hpp"
#include "lcx/oracle.hpp"
#include "lcx/pair_sampling.hpp"
#include "lcx/report.hpp"
#include "lcx/shortest_path.hpp"
#include "lcx/stats.hpp"
#include "lcx/synth.hpp"
