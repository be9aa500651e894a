"""ECG-based 4-stage sleep staging.

Dual-windowed pipeline over single-lead ECG: 5-minute/30-second-step
windows feed handcrafted HRV+EDR features into classical classifiers;
30-second/10-second-step windows feed a compact 1-D CNN whose 8-bit
integer inference engine is profiled for per-inference energy.
"""

from .cardio import (
    EdrSeries,
    InsufficientBeatsError,
    RPeakSeries,
    derive_edr_series,
    derive_rr_series,
    detect_rpeaks,
    dump_peaks_csv,
)
from .eval import (
    Hypnogram,
    MetricsResult,
    compute_metrics,
    emit_hypnogram,
    export_hypnogram_csv,
    plot_hypnogram,
)
from .ingest import (
    EPOCH_SECONDS,
    STAGE_ORDER,
    EcgRecording,
    IngestError,
    SleepStage,
    StageAnnotation,
    load_recording,
    map_stage_labels,
    parse_annotations,
    read_recording,
    write_recording_csv,
)
from .ml import (
    ClassifierSpec,
    CvResult,
    TrainedModel,
    cross_validate,
    load_model as load_classifier,
    predict,
    save_model as save_classifier,
    train_classifier,
    tune_hyperparameters,
)
from .windowing import (
    DatasetSplit,
    Window,
    WindowExcludedError,
    WindowMode,
    WindowSet,
    WindowingConfig,
    assign_window_label,
    export_manifest,
    generate_windows,
    split_dataset,
    window_count,
)

__version__ = "0.1.0"
