"""Fixed physical constants and default parameter values.

Units follow gas-exchange convention: rates in umol m-2 s-1, CO2 as a
mole fraction in umol mol-1, O2 in mmol mol-1, activation/deactivation
energies in kJ mol-1, temperatures in Kelvin inside the model (data
files carry Celsius).
"""

from __future__ import annotations

from dataclasses import dataclass

# Universal gas constant in kJ mol-1 K-1, matching the kJ-based energies.
R_GAS = 0.008314

# Reference temperature of the response functions. The exponent is
# written with 1/298, not 1/298.15; changing it shifts every scaled
# parameter, so it is pinned here once.
T_REF = 298.0

CELSIUS_OFFSET = 273.15


@dataclass(frozen=True)
class FvCBConstants:
    """Quantities held fixed during fitting.

    o2 is the oxygen mole fraction at the chloroplast (mmol mol-1),
    standard atmosphere by default. The dha_* values are activation
    energies of parameters whose temperature response is never fitted;
    dhd_* are deactivation energies of the peaked response. All kJ/mol.
    """

    o2: float = 210.0
    r_gas: float = R_GAS
    dha_rd: float = 46.39
    dha_kc: float = 79.43
    dha_ko: float = 36.38
    dha_gamma: float = 37.83
    dhd_vcmax: float = 200.0
    dhd_jmax: float = 200.0
    dhd_tpu: float = 201.8


# Default initial values for every fittable parameter. Main four are
# per curve, the rest shared per fitting group. alpha_g is handled
# through a logistic squash; -12 maps to ~6e-6, i.e. effectively zero
# while keeping the raw value finite and trainable.
PARAM_DEFAULTS: dict[str, float] = {
    "vcmax25": 100.0,
    "jmax25": 200.0,
    "tpu25": 25.0,
    "rd25": 1.5,
    "dha_vcmax": 65.33,
    "dha_jmax": 43.9,
    "dha_tpu": 53.1,
    "topt_vcmax": 311.0,
    "topt_jmax": 311.0,
    "topt_tpu": 306.0,
    "alpha": 0.5,
    "theta": 0.7,
    "alpha_g_raw": -12.0,
    "gm": 10.0,
    "kc25": 404.9,
    "ko25": 278.4,
    "gamma25": 42.75,
}

# Default Qin and Tleaf applied when the input file lacks the columns.
DEFAULT_QIN = 2000.0
DEFAULT_TLEAF_C = 25.0
