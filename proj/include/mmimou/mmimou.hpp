// SPDX-License-Identifier: Apache-2.0
//
// mmimou - system-level simulator for massive MIMO in unlicensed indoor bands
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

#pragma once

#include "mmimou/common.hpp"
#include "mmimou/geometry.hpp"
#include "mmimou/channel.hpp"
#include "mmimou/beamforming.hpp"
#include "mmimou/phy.hpp"
#include "mmimou/mac.hpp"
#include "mmimou/config.hpp"
#include "mmimou/engine.hpp"
#include "mmimou/io.hpp"
