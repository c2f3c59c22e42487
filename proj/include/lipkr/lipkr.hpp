/*
 * Copyright 2026 The lipkr authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIPKR_LIPKR_HPP
#define LIPKR_LIPKR_HPP

#include "lipkr/config.hpp"
#include "lipkr/conv_factors.hpp"
#include "lipkr/datasets.hpp"
#include "lipkr/demo.hpp"
#include "lipkr/layers.hpp"
#include "lipkr/losses.hpp"
#include "lipkr/matrix.hpp"
#include "lipkr/model.hpp"
#include "lipkr/rng.hpp"
#include "lipkr/robustness.hpp"
#include "lipkr/serialize.hpp"
#include "lipkr/simplex.hpp"
#include "lipkr/spectral.hpp"
#include "lipkr/svg.hpp"
#include "lipkr/train.hpp"
#include "lipkr/transport.hpp"

#endif  // LIPKR_LIPKR_HPP
