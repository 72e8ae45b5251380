// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace objmap {

// Corruption knobs shared by the scene renderer and the correspondence
// oracle. Distances in metres (canonical units for correspondence noise).
struct NoiseModel {
  double depth_std = 0.005;
  double depth_outlier_rate = 0.01;
  double corr_std = 0.02;
  double corr_outlier_rate = 0.1;
  double confidence_noise_std = 0.1;
  int mask_erode_px = 0;
  int mask_dilate_px = 0;
};

}  // namespace objmap
