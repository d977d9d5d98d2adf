#pragma once

#include "oubv/bv.hpp"
#include "oubv/convex.hpp"
#include "oubv/gaussian.hpp"
#include "oubv/lab.hpp"
#include "oubv/mollifier.hpp"
#include "oubv/ou.hpp"
