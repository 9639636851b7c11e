#pragma once

#include "fracanalog/analogues.hpp"
#include "fracanalog/config.hpp"
#include "fracanalog/embedding.hpp"
#include "fracanalog/fft.hpp"
#include "fracanalog/numeric.hpp"
#include "fracanalog/parallel.hpp"
#include "fracanalog/pipeline.hpp"
#include "fracanalog/random.hpp"
#include "fracanalog/series.hpp"
#include "fracanalog/series_io.hpp"
#include "fracanalog/statistics.hpp"
#include "fracanalog/structure_functions.hpp"
#include "fracanalog/synthesis.hpp"
#include "fracanalog/volumes.hpp"
