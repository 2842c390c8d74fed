#pragma once

#include "speckle/config.hpp"
#include "speckle/core/entropy.hpp"
#include "speckle/core/geometry.hpp"
#include "speckle/core/intensity_io.hpp"
#include "speckle/core/propagation.hpp"
#include "speckle/core/source.hpp"
#include "speckle/gabor/correlation.hpp"
#include "speckle/gabor/gabor.hpp"
#include "speckle/gabor/gabor_io.hpp"
#include "speckle/ingest/analysis.hpp"
#include "speckle/ingest/pgm.hpp"
#include "speckle/montecarlo/drift.hpp"
#include "speckle/montecarlo/suites.hpp"
#include "speckle/theory/bit_error.hpp"
#include "speckle/theory/curves.hpp"
#include "speckle/theory/gabor_stats.hpp"
#include "speckle/theory/information.hpp"
#include "speckle/theory/intensity_stats.hpp"
#include "speckle/theory/moments.hpp"
#include "speckle/theory/special.hpp"
