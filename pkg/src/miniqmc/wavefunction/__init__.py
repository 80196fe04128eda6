from .jastrow import OneBodyJastrow, TwoBodyJastrowOpt, TwoBodyJastrowRef
from .slater import SlaterDetBlock, det_ratio, lu_inverse, sherman_morrison_update
from .trial import PRECISIONS, TrialWaveFunction, WaveFunctionConfig

__all__ = [
    "OneBodyJastrow", "TwoBodyJastrowOpt", "TwoBodyJastrowRef", "SlaterDetBlock",
    "det_ratio", "lu_inverse", "sherman_morrison_update", "PRECISIONS",
    "TrialWaveFunction", "WaveFunctionConfig",
]
