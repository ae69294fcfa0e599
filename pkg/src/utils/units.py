"""Conversions between the lab units of run configurations and SI."""
import math
from src.utils.constants import AMU, K_B, NANOKELVIN, NANOMETER

def hz_to_rad_s(frequency_hz: float) -> float:
    return 2.0 * math.pi * frequency_hz

def rad_s_to_hz(omega: float) -> float:
    return omega / (2.0 * math.pi)

def nk_to_kelvin(temperature_nk: float) -> float:
    return temperature_nk * NANOKELVIN

def kelvin_to_nk(temperature: float) -> float:
    return temperature / NANOKELVIN

def nk_to_joule(temperature_nk: float) -> float:
    """Thermal energy k_B*T of a temperature given in nK."""
    return K_B * temperature_nk * NANOKELVIN

def joule_to_nk(energy: float) -> float:
    return energy / (K_B * NANOKELVIN)

def nm_to_meter(length_nm: float) -> float:
    return length_nm * NANOMETER

def amu_to_kg(mass_amu: float) -> float:
    return mass_amu * AMU
