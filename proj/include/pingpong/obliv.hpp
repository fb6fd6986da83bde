#pragma once

#include "pingpong/obliv/compact.hpp"
#include "pingpong/obliv/primitives.hpp"
#include "pingpong/obliv/sort.hpp"
#include "pingpong/obliv/trace.hpp"
