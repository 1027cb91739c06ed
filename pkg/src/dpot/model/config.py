"""Model shape configuration and the closed-form parameter count."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelConfig:
    """Shapes of one model instance.

    ``C_in`` counts the input channels including the mask channel; the model
    predicts the ``C_in - 1`` field channels of the next frame. ``H`` is the
    native training resolution; evaluation at other resolutions goes through
    the resampled-kernel path and does not change any parameter shape.
    """

    H: int
    P: int
    T_ctx: int
    C_in: int
    d_z: int
    h: int
    L: int
    d_ffn: int
    groups: int

    def __post_init__(self) -> None:
        if self.H < 4 or self.P < 1 or self.H % self.P != 0:
            raise ValueError(f"patch size {self.P} must divide resolution {self.H}")
        if self.d_z < 1 or self.h < 1 or self.d_z % self.h != 0:
            raise ValueError(f"heads {self.h} must divide width {self.d_z}")
        if self.groups < 1 or self.d_z % self.groups != 0:
            raise ValueError(f"groups {self.groups} must divide width {self.d_z}")
        if self.T_ctx < 1:
            raise ValueError(f"T_ctx must be >= 1, got {self.T_ctx}")
        if self.C_in < 2:
            raise ValueError(f"C_in must be >= 2 (fields plus mask), got {self.C_in}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.d_ffn < 1:
            raise ValueError(f"d_ffn must be >= 1, got {self.d_ffn}")

    @property
    def C_out(self) -> int:
        return self.C_in - 1

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(**{k: int(v) for k, v in data.items()})

    @property
    def d_head(self) -> int:
        return self.d_z // self.h

    @property
    def tokens_per_side(self) -> int:
        return self.H // self.P

    def layer_param_count(self) -> int:
        """Scalars in one Fourier attention layer: the h frequency MLPs, the
        group-norm affine pair, and the channel FFN."""
        d_h = self.d_head
        mixer = self.h * (2 * d_h * d_h + 2 * d_h)
        norm = 2 * self.d_z
        ffn = 2 * self.d_z * self.d_ffn + self.d_z + self.d_ffn
        return mixer + norm + ffn

    def param_count(self) -> int:
        """Total scalar parameters, matched against the constructed model."""
        embed = 3 * self.C_in
        patch = self.P * self.P * self.C_in * self.d_z + self.d_z
        temporal = self.T_ctx * self.d_z * self.d_z + self.d_z
        decoder = self.d_z * self.P * self.P * self.C_out + self.P * self.P * self.C_out
        return embed + patch + temporal + self.L * self.layer_param_count() + decoder


def nano_config(C_in: int = 2, T_ctx: int = 10, H: int = 32, L: int = 2) -> ModelConfig:
    """Desk-scale default: 64-wide, 4 heads, 4-pixel patches."""
    return ModelConfig(H=H, P=4, T_ctx=T_ctx, C_in=C_in, d_z=64, h=4, L=L,
                       d_ffn=64, groups=8)


def micro_config(C_in: int = 2, T_ctx: int = 5, H: int = 32) -> ModelConfig:
    """Smallest trainable configuration, for fast ablation sweeps."""
    return ModelConfig(H=H, P=4, T_ctx=T_ctx, C_in=C_in, d_z=32, h=4, L=2,
                       d_ffn=32, groups=8)


def tiny_config(C_in: int = 5, T_ctx: int = 10, H: int = 128) -> ModelConfig:
    """The smallest published shape family member (512-wide, 4 layers,
    4 heads); used here only for parameter accounting."""
    return ModelConfig(H=H, P=8, T_ctx=T_ctx, C_in=C_in, d_z=512, h=4, L=4,
                       d_ffn=512, groups=8)
