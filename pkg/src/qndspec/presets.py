"""Built-in device parameter sets from published circuit-QED experiments."""

from __future__ import annotations

from .model import DeviceParams, QubitParams

# Single transmon dispersively coupled to a coplanar waveguide resonator:
# (cavity, qubit, linewidth, coupling) = (6444.2, 4009, 1.69, 134) MHz.
# The derived shift is Gamma_1 = g^2/Delta ~ 2*pi * 7.37 MHz.
_N1_2010 = {
    "cavity_freq_MHz": 6444.2,
    "kappa_MHz": 1.69,
    "qubits": [{"omega_MHz": 4009.0, "g_MHz": 134.0}],
}

# Two-qubit readout device quoted directly by its dispersive shifts:
# cavity 6806 MHz, kappa 1 MHz, shifts (13, 4) MHz.
_N2_2010 = {
    "cavity_freq_MHz": 6806.0,
    "kappa_MHz": 1.0,
    "qubits": [{"gamma_shift_MHz": 13.0}, {"gamma_shift_MHz": 4.0}],
}

PRESETS: dict[str, dict] = {
    "n1-2010": _N1_2010,
    "n2-2010": _N2_2010,
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_device_dict(name: str) -> dict:
    """Raw config-shaped device block (linear MHz) for a preset."""
    if name not in PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    block = PRESETS[name]
    return {"cavity_freq_MHz": block["cavity_freq_MHz"],
            "kappa_MHz": block["kappa_MHz"],
            "qubits": [dict(q) for q in block["qubits"]]}


def preset_device(name: str) -> DeviceParams:
    """DeviceParams (angular units) for a preset."""
    block = preset_device_dict(name)
    qubits = [QubitParams.from_mhz(
        omega_mhz=q.get("omega_MHz"), g_mhz=q.get("g_MHz"),
        gamma_shift_mhz=q.get("gamma_shift_MHz"), t1_us=q.get("t1_us"))
        for q in block["qubits"]]
    return DeviceParams.from_mhz(cavity_freq_mhz=block["cavity_freq_MHz"],
                                 kappa_mhz=block["kappa_MHz"],
                                 qubits=qubits)
