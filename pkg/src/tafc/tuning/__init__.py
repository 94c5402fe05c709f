from .losses import (
    AlignmentWeights,
    LossBreakdown,
    action_loss,
    alignment_loss,
    logic_loss,
    parameter_loss,
    semantic_loss,
)
from .optimize import (
    DatasetItem,
    StructuredLogProbProvider,
    ThinkTuningResult,
    ToolTuningResult,
    TraceTuple,
    estimate_description_objective,
    optimize_tool_description,
    refine_descriptions,
    tune_think_description,
)
from .providers import (
    ChatProvider,
    EmbeddingProvider,
    HashedBagOfWordsEmbedder,
    LogProbProvider,
    ProviderBundle,
    ScriptedChatProvider,
    TokenOverlapLogProb,
    build_providers,
)

__all__ = [
    "AlignmentWeights",
    "ChatProvider",
    "DatasetItem",
    "EmbeddingProvider",
    "HashedBagOfWordsEmbedder",
    "LogProbProvider",
    "LossBreakdown",
    "ProviderBundle",
    "ScriptedChatProvider",
    "StructuredLogProbProvider",
    "ThinkTuningResult",
    "TokenOverlapLogProb",
    "ToolTuningResult",
    "TraceTuple",
    "action_loss",
    "alignment_loss",
    "build_providers",
    "estimate_description_objective",
    "logic_loss",
    "optimize_tool_description",
    "parameter_loss",
    "refine_descriptions",
    "semantic_loss",
    "tune_think_description",
]
