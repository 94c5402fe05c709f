"""Think-augmented function calling middleware."""

from .augment import AugmentationManifest, AugmentedTool, ThinkDescriptor, augment_tool, default_think_description
from .complexity import ComplexityWeights, score_parameter, select_reasoning_parameters
from .filtering import FilteredCall, ReasoningTrace, ToolRegistry, filter_arguments, wrap_arguments
from .schema_model import ToolSchema, parse_tool_schema, validate_arguments
from .trace_store import TraceRecord, TraceStore

__version__ = "0.1.0"

__all__ = [
    "AugmentationManifest",
    "AugmentedTool",
    "ComplexityWeights",
    "FilteredCall",
    "ReasoningTrace",
    "ThinkDescriptor",
    "ToolRegistry",
    "ToolSchema",
    "TraceRecord",
    "TraceStore",
    "augment_tool",
    "default_think_description",
    "filter_arguments",
    "parse_tool_schema",
    "score_parameter",
    "select_reasoning_parameters",
    "validate_arguments",
    "wrap_arguments",
]
