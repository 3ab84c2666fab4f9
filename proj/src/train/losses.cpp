#include "voxsr/train/losses.hpp"

#include "voxsr/common/error.hpp"

namespace voxsr::train {

Stage1Loss stage1_loss(const std::array<nets::ScalePrediction, 3>& pred,
                       const voxel::ReconTargets& targets, const LossWeights& weights) {
  using tensor::Array;
  if (weights.lambda_mask < 0 || weights.lambda_offset < 0) {
    fail_arg("stage1_loss: loss weights must be >= 0");
  }

  Array mask_sum, offset_sum;
  for (int s = 0; s < 3; ++s) {
    const auto& p = pred[static_cast<std::size_t>(s)];
    const auto& t = targets.at(s);
    if (p.spec.dims != t.spec.dims) {
      fail_arg("stage1_loss: scale ", s, " grid mismatch, prediction (", p.spec.dims[0], ",",
               p.spec.dims[1], ",", p.spec.dims[2], ") vs target (", t.spec.dims[0], ",",
               t.spec.dims[1], ",", t.spec.dims[2], ")");
    }
    Array mask_target = Array::from_vector(p.mask_prob.shape(), t.mask);
    Array mask_term = tensor::bce(p.mask_prob, mask_target);

    Array offset_target = Array::from_vector(p.offset.shape(), t.offset);
    Array offset_term = tensor::masked_l1(p.offset, offset_target, mask_target);

    mask_sum = s == 0 ? mask_term : tensor::add(mask_sum, mask_term);
    offset_sum = s == 0 ? offset_term : tensor::add(offset_sum, offset_term);
  }

  Stage1Loss out;
  out.mask_term = mask_sum.scalar();
  out.offset_term = offset_sum.scalar();
  out.total = tensor::add(tensor::scale(mask_sum, weights.lambda_mask),
                          tensor::scale(offset_sum, weights.lambda_offset));
  return out;
}

}  // namespace voxsr::train
