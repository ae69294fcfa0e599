from pydantic import BaseModel, ConfigDict # type: ignore

class FrozenModel(BaseModel):
    """Base model for validated, immutable inputs; unknown fields are rejected."""
    model_config = ConfigDict(frozen=True, extra="forbid")
