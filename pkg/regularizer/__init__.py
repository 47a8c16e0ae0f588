from regularizer.adaptive_regularizer import AdaptiveRegularizer, build_regularizer, unit_alpha_regularizer, \
    zero_regularizer
from regularizer.mask import ConstantMaskProvider, FileMaskProvider, LocalResponseMaskProvider, MaskProvider, \
    MaskProviderFactory, SpatialMask, average_mask, make_mask

__all__ = ["AdaptiveRegularizer", "build_regularizer", "unit_alpha_regularizer", "zero_regularizer",
           "ConstantMaskProvider", "FileMaskProvider", "LocalResponseMaskProvider", "MaskProvider",
           "MaskProviderFactory", "SpatialMask", "average_mask", "make_mask"]
