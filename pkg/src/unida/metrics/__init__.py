from unida.metrics.crps import crps, crps_pointwise
from unida.metrics.csi import SEVIR_THRESHOLDS, CsiResult, csi
from unida.metrics.errors import LatWeights, NrmseResult, acc, bias, lat_weights, nrmse
from unida.metrics.report import MetricReport
from unida.metrics.spectrum import SpectrumBands, radial_spectrum, spectrum_error

__all__ = [
    "CsiResult",
    "LatWeights",
    "MetricReport",
    "NrmseResult",
    "SEVIR_THRESHOLDS",
    "SpectrumBands",
    "acc",
    "bias",
    "crps",
    "crps_pointwise",
    "csi",
    "lat_weights",
    "nrmse",
    "radial_spectrum",
    "spectrum_error",
]
