"""Self-maintainable materialized views with auxiliary-view gluing."""

from .avderive import AvDef, AvSet, CountReport, derive_av_set, materialize_avset, tuple_count_report
from .catalog import AttributeDef, Catalog, ForeignKey, JoinEdge, RelationDef, ViewDef, make_catalog
from .datagen import GenParams, gen_dataset
from .errors import (
    CatalogError,
    IntegrityError,
    ParseError,
    PlanError,
    ViewError,
    ViewkeeperError,
)
from .gluing import (
    AvStore,
    GlueDecision,
    GluedAv,
    MergedAvSet,
    fold_av_sets,
    glue_cost,
    merge_av_sets,
    reconstruct_av,
)
from .maintenance import ViewDelta, WarehouseState, apply_batch, av_delta, init_state, mv_delta
from .relstore import Database, RelationInstance, eval_av, evaluate_view, insert_batch
from .sqlparse import parse_schema, parse_view

__version__ = "0.1.0"

__all__ = [
    "AttributeDef", "AvDef", "AvSet", "AvStore", "Catalog", "CatalogError", "CountReport",
    "Database", "ForeignKey", "GenParams", "GlueDecision", "GluedAv", "IntegrityError",
    "JoinEdge", "MergedAvSet", "ParseError", "PlanError", "RelationDef", "RelationInstance",
    "ViewDef", "ViewDelta", "ViewError", "ViewkeeperError", "WarehouseState", "apply_batch",
    "av_delta", "derive_av_set", "eval_av", "evaluate_view", "fold_av_sets", "gen_dataset",
    "glue_cost", "init_state", "insert_batch", "make_catalog", "materialize_avset",
    "merge_av_sets", "mv_delta", "parse_schema", "parse_view", "reconstruct_av",
    "tuple_count_report",
]
