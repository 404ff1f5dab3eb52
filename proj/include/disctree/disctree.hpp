#ifndef DISCTREE_DISCTREE_HPP
#define DISCTREE_DISCTREE_HPP

#include "analysis.hpp"
#include "discrepancy.hpp"
#include "estimator.hpp"
#include "eval.hpp"
#include "geometry.hpp"
#include "partition.hpp"

#endif  // DISCTREE_DISCTREE_HPP
