from pydantic import BaseModel, RootModel, field_validator
from typing import Dict, List


class TensorEntrySchema(BaseModel):
    dtype: str
    shape: List[int]
    file: str
    byte_offset: int

    @field_validator("dtype")
    def check_dtype(cls, v: str) -> str:
        if v not in ["f32", "i64"]:
            raise ValueError(f'Invalid dtype: {v}. dtype must be one of ["f32", "i64"]')
        return v

    @field_validator("shape")
    def check_shape(cls, v: List[int]) -> List[int]:
        if any(dim < 0 for dim in v):
            raise ValueError(f"Negative dimension in shape {v}")
        return v

    @field_validator("byte_offset")
    def check_offset(cls, v: int) -> int:
        if v < 0:
            raise ValueError("byte_offset must be nonnegative")
        return v


class ManifestSchema(RootModel[Dict[str, TensorEntrySchema]]):
    """manifest.json: tensor name -> entry."""
