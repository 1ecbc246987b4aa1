#pragma once

#include "frobkit/series.hpp"
#include "frobkit/manifold.hpp"
#include "frobkit/geometry.hpp"
#include "frobkit/coords.hpp"
#include "frobkit/hierarchy.hpp"
#include "frobkit/io.hpp"
#include "frobkit/verify.hpp"
