"""Physical coefficients of the MGT operator."""

from pydantic import BaseModel, ConfigDict, computed_field, model_validator

from jmgtlab.config import settings


class Coefficients(BaseModel):
    """
    Coefficients alpha, b, c of P = d_t^3 + alpha d_t^2 - b Lap d_t - c^2 Lap.

    beta = c^2 / b and gamma = alpha - beta are always derived from the stored
    values, never stored on their own.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float
    b: float
    c: float
    big_m: float = settings.default_big_m

    @model_validator(mode="after")
    def _check_admissible(self) -> "Coefficients":
        if self.big_m <= 1.0:
            raise ValueError(f"big_m must exceed 1, got {self.big_m}")
        lo, hi = 1.0 / self.big_m, self.big_m
        for name in ("alpha", "b", "c"):
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise ValueError(f"{name}={value} outside admissible range [{lo:.4g}, {hi:.4g}]")
        return self

    @computed_field
    @property
    def beta(self) -> float:
        return self.c**2 / self.b

    @computed_field
    @property
    def gamma(self) -> float:
        return self.alpha - self.c**2 / self.b

    @property
    def tau(self) -> float:
        return 1.0
