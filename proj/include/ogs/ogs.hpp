// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ogs/camera_models.hpp"
#include "ogs/common.hpp"
#include "ogs/core_model.hpp"
#include "ogs/error_analysis.hpp"
#include "ogs/image_io.hpp"
#include "ogs/metrics.hpp"
#include "ogs/parallel.hpp"
#include "ogs/projection.hpp"
#include "ogs/quadrature.hpp"
#include "ogs/rasterizer.hpp"
#include "ogs/scene_io.hpp"
#include "ogs/synth.hpp"
