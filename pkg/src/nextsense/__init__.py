"""nextsense: semi-synthetic 5G sensing dataset generation platform."""

from .waveform import GridDims, ReferenceSignal, generate_reference, grid_power
from .channel import (
    ChannelScenario,
    FadingProcess,
    Tap,
    apply_channel,
    fading_autocorrelation_oracle,
    frequency_response,
    load_tdl_preset,
    path_loss_db,
    read_tap_file,
    write_tap_file,
)
from .estimation import (
    estimate_freq_channel,
    export_scenario,
    doppler_profile,
    impulse_response,
    power_delay_profile,
    rms_delay_spread,
    select_dominant_taps,
)
from .scenario import (
    Box,
    Cbr,
    ExperimentSpec,
    RadioConfig,
    UESpec,
    Waypoints,
    distance_to_antenna,
    spec_from_json,
    spec_to_json,
    step_mobility,
    trajectory,
    validate_spec,
)
from .runner import (
    RunDataset,
    read_dataset,
    replay_estimate,
    run_experiment,
    write_dataset,
)
from .validation import (
    EnsembleStats,
    cross_correlation,
    ensemble_report,
    ks_two_sample,
    magnitude_variance,
    power_normalize,
    temporal_autocorrelation,
    train_eval_classifier,
    wasserstein_1d,
    waterfall,
)

__version__ = "0.1.0"
