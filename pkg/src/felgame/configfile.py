"""Read and write game configs as human-editable INI files.

Layout: one ``[server]`` section plus one ``[device.i]`` section per
device, numbered consecutively from 1.  Keys mirror the parameter names
(the device scale written as ``lambda`` in the file maps to the
``lam`` attribute, which cannot be called ``lambda`` in Python)::

    [server]
    alpha = 5.0
    beta = 2.0
    rho = 8.0
    w = 10.0
    r = 10.0
    t = 5.0
    k = 13.2
    a = 0.7

    [device.1]
    alpha = 1.5
    beta = 1.0
    psi_hi = 1.8
    psi_lo = 0.4
    lambda = 0.6
    delta = 0.018
    data_size = 750
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError
from .model import DeviceParams, GameConfig, ServerParams

_SERVER_KEYS = ("alpha", "beta", "rho", "w", "r", "t", "k", "a")
_DEVICE_KEYS = ("alpha", "beta", "psi_hi", "psi_lo", "lambda", "delta",
                "data_size")


def _section_floats(parser, section: str, keys) -> dict[str, float]:
    out = {}
    for key in keys:
        if not parser.has_option(section, key):
            raise ConfigError(f"[{section}] is missing key {key!r}")
        raw = parser.get(section, key)
        try:
            out[key] = float(raw)
        except ValueError:
            raise ConfigError(
                f"[{section}] {key} = {raw!r} is not a number"
            ) from None
    extra = set(parser.options(section)) - set(keys)
    if extra:
        raise ConfigError(
            f"[{section}] has unknown keys: {', '.join(sorted(extra))}"
        )
    return out


def load_config(path) -> GameConfig:
    """Parse a config file into a validated :class:`GameConfig`."""
    parser = configparser.ConfigParser()
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    if not parser.has_section("server"):
        raise ConfigError("missing [server] section")
    srv = _section_floats(parser, "server", _SERVER_KEYS)

    device_sections = [s for s in parser.sections() if s.startswith("device.")]
    expected = [f"device.{i}" for i in range(1, len(device_sections) + 1)]
    if sorted(device_sections) != sorted(expected) or not device_sections:
        raise ConfigError(
            "device sections must be [device.1] .. [device.n] with n >= 1"
        )

    devices = []
    for name in expected:
        vals = _section_floats(parser, name, _DEVICE_KEYS)
        devices.append(DeviceParams(
            alpha=vals["alpha"],
            beta=vals["beta"],
            psi_hi=vals["psi_hi"],
            psi_lo=vals["psi_lo"],
            lam=vals["lambda"],
            delta=vals["delta"],
            data_size=vals["data_size"],
        ))
    return GameConfig(devices=tuple(devices), server=ServerParams(**srv))


def save_config(cfg: GameConfig, path) -> None:
    """Write ``cfg`` in the format accepted by :func:`load_config`."""
    lines = ["[server]"]
    srv = cfg.server
    for key in _SERVER_KEYS:
        lines.append(f"{key} = {getattr(srv, key)!r}")
    for i, dev in enumerate(cfg.devices, start=1):
        lines.append("")
        lines.append(f"[device.{i}]")
        lines.append(f"alpha = {dev.alpha!r}")
        lines.append(f"beta = {dev.beta!r}")
        lines.append(f"psi_hi = {dev.psi_hi!r}")
        lines.append(f"psi_lo = {dev.psi_lo!r}")
        lines.append(f"lambda = {dev.lam!r}")
        lines.append(f"delta = {dev.delta!r}")
        lines.append(f"data_size = {dev.data_size!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def config_to_dict(cfg: GameConfig) -> dict:
    """Plain-dict form of a config, used in experiment manifests."""
    return {
        "server": {k: getattr(cfg.server, k) for k in _SERVER_KEYS},
        "devices": [
            {
                "alpha": d.alpha, "beta": d.beta,
                "psi_hi": d.psi_hi, "psi_lo": d.psi_lo,
                "lambda": d.lam, "delta": d.delta,
                "data_size": d.data_size,
            }
            for d in cfg.devices
        ],
    }


def config_from_dict(data: dict) -> GameConfig:
    """Inverse of :func:`config_to_dict`."""
    try:
        devices = tuple(
            DeviceParams(
                alpha=d["alpha"], beta=d["beta"],
                psi_hi=d["psi_hi"], psi_lo=d["psi_lo"],
                lam=d["lambda"], delta=d["delta"],
                data_size=d["data_size"],
            )
            for d in data["devices"]
        )
        server = ServerParams(**data["server"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config dict: {exc}") from exc
    return GameConfig(devices=devices, server=server)
