// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <besttime/analysis.hpp>
#include <besttime/config.hpp>
#include <besttime/error.hpp>
#include <besttime/evaluation.hpp>
#include <besttime/grid.hpp>
#include <besttime/ingestion.hpp>
#include <besttime/parallel.hpp>
#include <besttime/ptr_filter.hpp>
#include <besttime/schedules.hpp>
#include <besttime/synthgen.hpp>
#include <besttime/tsv.hpp>
