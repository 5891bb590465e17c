from dataclasses import replace

from fransim.config import (
    DetectorParams,
    ExperimentConfig,
    InterferometerParams,
    SourceParams,
    TphcParams,
)


def clean_config(pair_rate=1e5, visibility=0.957, window=350e-12,
                 jitter_stop=0.0, dark_start=0.0, dark_stop=0.0,
                 seed=1) -> ExperimentConfig:
    """Lossless, dark-free baseline; every imperfection opt-in."""
    return ExperimentConfig(
        source=SourceParams(pair_rate=pair_rate, split_efficiency=1.0,
                            arm1_transmission=1.0, arm2_transmission=1.0),
        analyzer1=InterferometerParams(),
        analyzer2=InterferometerParams(),
        detector_start=DetectorParams(efficiency=1.0, dark_rate=dark_start),
        detector_stop=DetectorParams(efficiency=1.0, dark_rate=dark_stop,
                                     jitter_fwhm=jitter_stop),
        tphc=TphcParams(window_width=window),
        visibility=visibility,
        seed=seed,
    )
