#pragma once

/// Umbrella header for the whole library.

#include "moodcast/errors.hpp"
#include "moodcast/series.hpp"
#include "moodcast/csv.hpp"
#include "moodcast/ingestion.hpp"
#include "moodcast/sentiment.hpp"
#include "moodcast/features.hpp"
#include "moodcast/factors.hpp"
#include "moodcast/special.hpp"
#include "moodcast/econometrics.hpp"
#include "moodcast/optimize.hpp"
#include "moodcast/arima.hpp"
#include "moodcast/smoothing.hpp"
#include "moodcast/forecasting.hpp"
#include "moodcast/fixture.hpp"
#include "moodcast/pipeline.hpp"
