import math
from pydantic import Field, field_validator # type: ignore
from src.schemas.base_schemas import FrozenModel
from src.utils.constants import DEFAULT_ENERGY_CUTOFF, HBAR, K_B
from src.utils.validation_utils import validate_energy_cutoff

class TrapModel(FrozenModel):
    """
    Physical parameters of the gas, the harmonic trap and the bath, in SI units.

    The interaction coupling is derived from the scattering length on access and
    never stored on its own.
    """
    omega_x: float = Field(..., gt=0, description="Trap angular frequency along x (rad/s)")
    omega_y: float = Field(..., gt=0, description="Trap angular frequency along y (rad/s)")
    omega_z: float = Field(..., gt=0, description="Trap angular frequency along z (rad/s)")
    mass: float = Field(..., gt=0, description="Atomic mass (kg)")
    scattering_length: float = Field(..., ge=0, description="s-wave scattering length (m)")
    n_total: int = Field(..., ge=1, description="Total particle number N")
    temperature: float = Field(..., gt=0, description="Temperature (K)")
    gamma: float = Field(..., gt=0, description="Non-condensate correlation decay rate (1/s)")
    energy_cutoff: float = Field(DEFAULT_ENERGY_CUTOFF, description="Mode cutoff in units of k_B*T")

    @field_validator('energy_cutoff')
    @classmethod
    def validate_energy_cutoff_field(cls, v: float) -> float:
        return validate_energy_cutoff(v)

    @property
    def omegas(self) -> tuple[float, float, float]:
        return (self.omega_x, self.omega_y, self.omega_z)

    @property
    def omega_bar(self) -> float:
        """Geometric mean trap frequency."""
        return (self.omega_x * self.omega_y * self.omega_z) ** (1.0 / 3.0)

    @property
    def beta(self) -> float:
        return 1.0 / (K_B * self.temperature)

    @property
    def coupling(self) -> float:
        """Contact coupling g = 4*pi*a*hbar^2/m."""
        return 4.0 * math.pi * self.scattering_length * HBAR ** 2 / self.mass

    @property
    def ground_energy(self) -> float:
        return 0.5 * HBAR * (self.omega_x + self.omega_y + self.omega_z)

    def with_updates(self, **changes) -> "TrapModel":
        """Return a re-validated copy with some fields replaced."""
        return TrapModel(**{**self.model_dump(), **changes})
