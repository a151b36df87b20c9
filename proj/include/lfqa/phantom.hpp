/*
 * lfqa : low-field MRI quality assessment and hippocampus atlas toolkit
 *
 * Copyright 2026 The lfqa Authors
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

#pragma once

#include "lfqa/rng.hpp"
#include "lfqa/volume.hpp"

namespace lfqa {

/// Synthetic T2-like head with a binary hippocampus label.
struct Phantom {
  Volume image;
  LabelMask hippocampus;
};

/**
 * Ellipsoidal head (scalp shell, brain, ventricles, an off-centre lesion that
 * breaks the mirror symmetry) with two hippocampi, lightly smoothed, values in
 * [0, 1]. With `variation`, shapes, positions and intensities are jittered by
 * a few percent to mimic different subjects.
 */
Phantom make_phantom(const Index3 &dims, const Vec3 &spacing = Vec3::Ones(),
                     Rng *variation = nullptr);

} // namespace lfqa
