from typing import Literal
from pydantic import Field, field_validator, model_validator # type: ignore
from src.schemas.base_schemas import FrozenModel
from src.schemas.trap_model import TrapModel
from src.utils.constants import DEFAULT_ENERGY_CUTOFF, DEFAULT_WINDOW
from src.utils.units import amu_to_kg, hz_to_rad_s, nk_to_kelvin, nm_to_meter
from src.utils.validation_utils import validate_energy_cutoff

class RunConfig(FrozenModel):
    """
    Run configuration in lab units, as read from an INI file.

    Frequencies are linear (Hz), Gamma is a plain rate (1/s, written in Hz),
    temperature is in nK, the scattering length in nm and the mass in atomic
    mass units. ``to_trap_model`` is the single place where SI conversion
    happens.
    """
    mode: Literal["spectrum", "rates", "evolve", "steady", "oracle", "sweep"] = Field(
        "steady", description="Pipeline to run"
    )
    n_total: int = Field(..., ge=1, description="Total particle number N")
    omega_x_hz: float = Field(..., gt=0, description="Trap frequency along x (Hz)")
    omega_y_hz: float = Field(..., gt=0, description="Trap frequency along y (Hz)")
    omega_z_hz: float = Field(..., gt=0, description="Trap frequency along z (Hz)")
    temperature_nk: float = Field(..., gt=0, description="Temperature (nK)")
    scattering_length_nm: float = Field(..., ge=0, description="s-wave scattering length (nm)")
    mass_amu: float = Field(..., gt=0, description="Atomic mass (u)")
    gamma_hz: float = Field(..., gt=0, description="Non-condensate correlation decay rate (1/s)")

    energy_cutoff: float = Field(DEFAULT_ENERGY_CUTOFF, description="Mode cutoff in units of k_B*T")
    window: float = Field(DEFAULT_WINDOW, gt=0, description="Energy window half-width in units of Gamma")
    rate_mode: Literal["discrete", "semiclassical"] = Field("discrete", description="Rate evaluation mode")
    include_g_terms: bool = Field(False, description="Add the g-type terms to the single-particle rates")
    include_pair_rates: bool = Field(False, description="Evaluate pair rates for the negligibility check")

    integrator: Literal["rk45", "bdf"] = Field("rk45", description="Time integrator")
    rtol: float = Field(1e-10, gt=0, lt=1, description="Relative integration tolerance")
    atol: float = Field(1e-13, gt=0, lt=1, description="Absolute integration tolerance")
    t_final_s: float = Field(10.0, gt=0, description="Propagation horizon (s)")
    output_points: int = Field(201, ge=2, description="Number of output times")
    snapshot_stride: int = Field(10, ge=1, description="Keep every n-th output as a full distribution")
    initial_condition: Literal["empty", "delta", "canonical"] = Field("empty", description="Initial distribution")
    initial_n0: int = Field(0, ge=0, description="Condensate number for a delta initial condition")

    t_over_tc_min: float = Field(0.2, gt=0, description="Lowest T/T_c of a sweep")
    t_over_tc_max: float = Field(1.2, gt=0, le=1.5, description="Highest T/T_c of a sweep")
    sweep_points: int = Field(11, ge=2, description="Temperatures in a sweep")
    sweep_kinetics: bool = Field(True, description="Also compute the kinetics steady state in a sweep")

    kernel_bins: int = Field(24, ge=1, description="Coarse energy bins of the semiclassical kernel")
    kernel_samples: int = Field(16, ge=1, description="Sampled mode pairs per kernel bin pair")
    threads: int | None = Field(None, ge=1, description="Worker threads (defaults to BEC_THREADS)")

    @field_validator('energy_cutoff')
    @classmethod
    def validate_energy_cutoff_field(cls, v: float) -> float:
        return validate_energy_cutoff(v)

    @model_validator(mode="after")
    def validate_consistency(self) -> "RunConfig":
        if self.initial_n0 > self.n_total:
            raise ValueError(f"initial_n0 must not exceed n_total ({self.initial_n0} > {self.n_total})")
        if self.t_over_tc_min >= self.t_over_tc_max:
            raise ValueError("t_over_tc_min must be below t_over_tc_max")
        return self

    def to_trap_model(self) -> TrapModel:
        """Convert to the SI TrapModel."""
        return TrapModel(
            omega_x=hz_to_rad_s(self.omega_x_hz),
            omega_y=hz_to_rad_s(self.omega_y_hz),
            omega_z=hz_to_rad_s(self.omega_z_hz),
            mass=amu_to_kg(self.mass_amu),
            scattering_length=nm_to_meter(self.scattering_length_nm),
            n_total=self.n_total,
            temperature=nk_to_kelvin(self.temperature_nk),
            gamma=self.gamma_hz,
            energy_cutoff=self.energy_cutoff,
        )
