#pragma once

#include "tvnet/error.hpp"
#include "tvnet/random.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/ising.hpp"
#include "tvnet/design.hpp"
#include "tvnet/smooth.hpp"
#include "tvnet/tv.hpp"
#include "tvnet/selection.hpp"
#include "tvnet/graph.hpp"
#include "tvnet/synthetic.hpp"
#include "tvnet/io.hpp"
