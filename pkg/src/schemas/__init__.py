from src.schemas import config_schema, manifest_schema, metrics_schema


class GetConfigSchemas:
    """Схемы конфигурации эксперимента."""
    experiment = config_schema.ExperimentConfig
    encoder = config_schema.EncoderConfig
    lora = config_schema.LoRAConfig
    tta = config_schema.TTAConfig
    balance = config_schema.BalanceConfig


class GetArchiveSchemas:
    """Схемы манифеста тензорного архива."""
    manifest = manifest_schema.ManifestSchema
    tensor_entry = manifest_schema.TensorEntrySchema


class GetReportSchemas:
    """Схемы строк CSV-отчетов."""
    metrics_row = metrics_schema.MetricsRowSchema
    summary_row = metrics_schema.SummaryRowSchema
    sweep_row = metrics_schema.SweepRowSchema
    projection_row = metrics_schema.ProjectionRowSchema
    eval_row = metrics_schema.EvalRowSchema
