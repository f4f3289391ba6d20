#pragma once

#include <treeharmonic/csv.hpp>
#include <treeharmonic/dirichlet.hpp>
#include <treeharmonic/error.hpp>
#include <treeharmonic/fatou.hpp>
#include <treeharmonic/measure.hpp>
#include <treeharmonic/operators.hpp>
#include <treeharmonic/parallel.hpp>
#include <treeharmonic/random.hpp>
#include <treeharmonic/scalar.hpp>
#include <treeharmonic/tree.hpp>
#include <treeharmonic/ucp.hpp>
