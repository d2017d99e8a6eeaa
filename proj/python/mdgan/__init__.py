"""Multi-discriminator GAN anomaly detection for tabular data.

Thin Python layer over the C++ core: network builders, training loops,
dataset partitioning, detection metrics and the experiment runner.
"""

from ._mdgan import (
    ConfigError,
    DatasetSplit,
    DivergenceError,
    LayerStack,
    ParseError,
    RawDataset,
    SchemaError,
    StateError,
    TrainConfig,
    TrainResult,
    auc_pr,
    auc_roc,
    bce_loss,
    build_d1,
    build_d2,
    build_generator,
    compute_metrics,
    d2_widths,
    derive_seed,
    eer,
    load_csv,
    make_synthetic,
    mse_loss,
    paired_t_test,
    partition,
    report_from_manifest,
    rmse_scores,
    run_experiment,
    t_critical_95,
    train_baseline,
    train_mdgan,
)

__all__ = [name for name in dir() if not name.startswith("_")]
