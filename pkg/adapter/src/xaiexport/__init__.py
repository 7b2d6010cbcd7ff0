"""Bridge from mainstream XAI explainer outputs to the attribution-bundle
interchange format consumed by the consensus engine."""

from .convert import densify_weight_lists, normalize_output, reduce_multiclass
from .export import ExplainerSelection, ExportJob, export_bundle, parse_selection
from .schema import ExportError, SCHEMA_VERSION

__version__ = "0.1.0"
