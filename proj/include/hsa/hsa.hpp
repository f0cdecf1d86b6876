#pragma once

#include "hsa/calibration.hpp"
#include "hsa/coupling.hpp"
#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"
#include "hsa/io.hpp"
#include "hsa/metrics.hpp"
#include "hsa/pcc.hpp"
#include "hsa/pose.hpp"
#include "hsa/trajectory.hpp"
