// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rspcert/certify.hpp"
#include "rspcert/chsh.hpp"
#include "rspcert/events.hpp"
#include "rspcert/extractor.hpp"
#include "rspcert/finite_stats.hpp"
#include "rspcert/report.hpp"
#include "rspcert/simulator.hpp"
#include "rspcert/witness.hpp"
