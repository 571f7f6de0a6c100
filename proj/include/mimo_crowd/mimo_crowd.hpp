// SPDX-License-Identifier: Apache-2.0
//
// mimo_crowd: user identification and channel estimation for crowded
// massive-MIMO uplink over Rician fading
// Copyright (C) 2026 The mimo_crowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MIMO_CROWD_HPP
#define MIMO_CROWD_HPP

#include "airlink.hpp"
#include "aoa.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "core.hpp"
#include "estimate.hpp"
#include "frame_io.hpp"
#include "harness.hpp"
#include "identify.hpp"
#include "report.hpp"
#include "rng.hpp"

#endif
