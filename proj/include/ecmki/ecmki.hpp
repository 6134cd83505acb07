#pragma once

#include "ecmki/boxplot.hpp"
#include "ecmki/cell.hpp"
#include "ecmki/cli.hpp"
#include "ecmki/common.hpp"
#include "ecmki/config.hpp"
#include "ecmki/csv.hpp"
#include "ecmki/drive_cycle.hpp"
#include "ecmki/enki.hpp"
#include "ecmki/ensemble.hpp"
#include "ecmki/forward.hpp"
#include "ecmki/identify.hpp"
#include "ecmki/measurement.hpp"
#include "ecmki/model.hpp"
#include "ecmki/ndct.hpp"
#include "ecmki/ocv.hpp"
#include "ecmki/pipeline.hpp"
#include "ecmki/results.hpp"
#include "ecmki/rk4.hpp"
#include "ecmki/rng.hpp"
#include "ecmki/simulate.hpp"
#include "ecmki/temper.hpp"
#include "ecmki/thermal.hpp"
#include "ecmki/thevenin.hpp"
