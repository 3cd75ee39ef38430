"""Vector pseudo relevance feedback over an exact cosine flat index.

The heavy lifting lives in the compiled ``vprf._core`` extension; this
package re-exports its public surface.
"""

from ._core import (  # noqa: F401
    AggregateReport,
    AggregateRow,
    BiaResult,
    Dataset,
    EmbeddingCorpus,
    EmbeddingRecord,
    FlatIndex,
    MetricConfig,
    MetricReport,
    OracleChoice,
    OracleResult,
    Qrels,
    RankedRun,
    RunEntry,
    ScoredHit,
    SweepResult,
    SynthDataset,
    TimingResult,
    VprfParams,
    __version__,
    aggregate_results,
    average_feedback,
    best_in_average,
    emit_report,
    format_metric_cell,
    format_percent,
    load_embeddings,
    load_qrels,
    load_run,
    ndcg_at_k,
    oracle,
    param_grid,
    parse_report_csv,
    percent_change,
    recall_at_k,
    rocchio_feedback,
    run_from_hits,
    run_sweep,
    run_vprf,
    save_embeddings,
    save_qrels,
    save_run,
    sweep_results_from_csv,
    sweep_results_to_csv,
    synth_corpus,
    time_per_query,
)
