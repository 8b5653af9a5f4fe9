#pragma once

#include <netlasso/datasets.hpp>
#include <netlasso/graph.hpp>
#include <netlasso/io.hpp>
#include <netlasso/losses.hpp>
#include <netlasso/partition.hpp>
#include <netlasso/path.hpp>
#include <netlasso/penalty.hpp>
#include <netlasso/solver.hpp>
#include <netlasso/thresholds.hpp>
#include <netlasso/types.hpp>
