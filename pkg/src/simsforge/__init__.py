"""simsforge: customisable role-playing characters, end to end.

Forge catalog-constrained characters, ground them in scenes, generate
emotion- and topic-steered dialogue corpora, evaluate agents by
interview, export instruction-tuning data, and serve characters over
HTTP.
"""

__version__ = "0.1.0"

from .catalog import AspectCatalog, CharacterSpec, load_catalog, sample_spec, validate_spec
from .persona import CharacterProfile, CharacterRecord, forge_character
from .provider import ChatReply, ChatRequest, MockProvider, OpenAIChatProvider

__all__ = [
    "__version__",
    "AspectCatalog",
    "CharacterSpec",
    "load_catalog",
    "sample_spec",
    "validate_spec",
    "CharacterProfile",
    "CharacterRecord",
    "forge_character",
    "ChatReply",
    "ChatRequest",
    "MockProvider",
    "OpenAIChatProvider",
]
