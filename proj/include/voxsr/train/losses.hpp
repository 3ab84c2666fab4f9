#pragma once

#include <array>

#include "voxsr/nets/decoder.hpp"
#include "voxsr/voxel/targets.hpp"

namespace voxsr::train {

struct LossWeights {
  double lambda_mask = 0.9;
  double lambda_offset = 0.1;
};

struct Stage1Loss {
  tensor::Array total;   // lambda_mask * sum(mask BCE) + lambda_offset * sum(masked L1)
  double mask_term = 0.0;
  double offset_term = 0.0;
};

/// Reconstruction objective over the three scales: dense BCE on the
/// occupancy mask plus L1 on offsets restricted to voxels whose target mask
/// is 1. Scale losses are summed unweighted before the lambda weighting.
Stage1Loss stage1_loss(const std::array<nets::ScalePrediction, 3>& pred,
                       const voxel::ReconTargets& targets, const LossWeights& weights);

}  // namespace voxsr::train
