"""
Input documents: pydantic models for architecture specs and the
catalog listing. JSON in and out goes through model_validate_json and
model_dump_json so parse errors carry a field path.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

SPEC_VERSION = '1'


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class InputDoc(_Strict):
    id: str = Field(min_length=1)
    dim: int = Field(ge=1)


class NodeDoc(_Strict):
    id: str = Field(min_length=1)
    gate: str = Field(min_length=1)
    hyperparams: Dict[str, Any] = Field(default_factory=dict)
    param_slice: Optional[str] = None


class ReadoutDoc(_Strict):
    parents: List[str]
    bias: bool = False
    rows: int = Field(default=1, ge=1)


class TransformerDoc(_Strict):
    """Transformer configuration; expands into nodes through the builder."""
    vocab: int = Field(ge=1)
    d0: int = Field(ge=1)
    layers: int = Field(ge=0)
    heads: int = Field(ge=1)
    d_k: int = Field(ge=1)
    d_v: int = Field(ge=1)
    widths: List[int]
    d_ff: Union[int, List[int]]
    d_out: int = Field(ge=1)
    tokens: int = Field(default=2, ge=1)
    activation: str = 'gelu_tanh'
    norm: str = 'layer_norm'
    eps: float = 1e-5
    temperature: float = 1.0
    pe_domain: Literal['finite', 'bounded', 'unbounded'] = 'bounded'
    pe_trainable: bool = False
    pe_freq_bounded: bool = False


class ArchSpecDoc(_Strict):
    version: str = SPEC_VERSION
    name: Optional[str] = None
    d_in: Optional[int] = Field(default=None, ge=1)
    d_out: Optional[int] = Field(default=None, ge=1)
    inputs: List[InputDoc] = Field(default_factory=list)
    nodes: List[NodeDoc] = Field(default_factory=list)
    # parent order of a node is the order in which its incoming edges appear
    edges: List[Tuple[str, str]] = Field(default_factory=list)
    lifting: Optional[List[List[int]]] = None
    readout: Optional[ReadoutDoc] = None
    transformer: Optional[TransformerDoc] = None
    mlp: Optional['MlpDoc'] = None

    @model_validator(mode='after')
    def _one_shape(self):
        shorthand = [s for s in (self.transformer, self.mlp) if s is not None]
        if len(shorthand) > 1:
            raise ValueError('give at most one of transformer, mlp')
        if not shorthand:
            missing = [name for name in ('d_in', 'd_out', 'readout') if getattr(self, name) is None]
            if missing:
                raise ValueError(f"explicit graphs need {', '.join(missing)}")
            if not self.inputs:
                raise ValueError('explicit graphs need at least one input')
        return self


class MlpDoc(_Strict):
    widths: List[int] = Field(min_length=2)
    activations: List[str] = Field(default_factory=list)


ArchSpecDoc.model_rebuild()


class CatalogRecord(_Strict):
    name: str
    description: str
    definability: str
    format: Optional[Tuple[int, int, int]] = None
    split_format: Optional[Tuple[int, int, int]] = None
    smooth: bool
    param_count: int
    caveats: List[str] = Field(default_factory=list)


class CatalogDoc(_Strict):
    version: str = SPEC_VERSION
    tool_version: str
    gates: List[CatalogRecord]
    losses: List[CatalogRecord]


def error_location(exc: ValidationError) -> Tuple[str, str]:
    """(location, message) of the first pydantic error, location like 'nodes[2].gate'."""
    errors = exc.errors()
    if not errors:
        return '<document>', str(exc)
    first = errors[0]
    parts = []
    for item in first.get('loc', ()):
        if isinstance(item, int):
            parts.append(f'[{item}]')
        else:
            parts.append(('.' if parts else '') + str(item))
    location = ''.join(parts) or '<document>'
    return location, first.get('msg', 'invalid value')
