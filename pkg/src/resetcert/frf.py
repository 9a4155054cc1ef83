"""Measured frequency-response ingestion, interpolation, and loop composition.

File format: CSV, UTF-8, '#' comments.  ``complex`` columns are
``freq_hz,real,imag``; ``magphase`` columns are ``freq_hz,mag_db,phase_deg``.
Frequencies are stored internally in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyTable, NonMonotoneFrequency, OutOfBand, ParseError
from .lti import RationalTF, evaluate

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FrfTable:
    """Sampled complex response on a strictly increasing positive grid (rad/s).

    ``freqs_hz`` keeps the file frequencies exactly as parsed so that a
    load/save cycle reproduces the table bit for bit.
    """

    freqs: np.ndarray
    values: np.ndarray
    freqs_hz: np.ndarray = None

    def __post_init__(self):
        f = np.asarray(self.freqs, float)
        v = np.asarray(self.values, complex)
        if f.size < 2:
            raise EmptyTable("need at least 2 FRF samples")
        if f.size != v.size:
            raise NonMonotoneFrequency("frequency and value columns differ in length")
        if np.any(f <= 0.0) or np.any(np.diff(f) <= 0.0):
            raise NonMonotoneFrequency("frequencies must be positive and strictly increasing")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)
        hz = self.freqs_hz if self.freqs_hz is not None else f / TWO_PI
        object.__setattr__(self, "freqs_hz", np.asarray(hz, float))

    @property
    def band(self):
        return float(self.freqs[0]), float(self.freqs[-1])


def _rows(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                yield tuple(float(p) for p in parts)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None


def load_frf(path, fmt: str = "complex") -> FrfTable:
    """Read an FRF file; ``fmt`` is ``complex`` or ``magphase``."""
    if fmt not in ("complex", "magphase"):
        raise ParseError(f"unknown FRF format {fmt!r}")
    hz, values = [], []
    for f_hz, a, b in _rows(path):
        hz.append(f_hz)
        if fmt == "complex":
            values.append(a + 1j * b)
        else:
            values.append(10.0 ** (a / 20.0) * np.exp(1j * np.pi * b / 180.0))
    if len(hz) < 2:
        raise EmptyTable(f"{path}: fewer than 2 data rows")
    hz = np.array(hz)
    return FrfTable(hz * TWO_PI, np.array(values), freqs_hz=hz)


def save_frf(table: FrfTable, path, fmt: str = "complex") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "complex":
            fh.write("# freq_hz,real,imag\n")
            for h, v in zip(table.freqs_hz, table.values):
                fh.write(f"{h:.17g},{v.real:.17g},{v.imag:.17g}\n")
        elif fmt == "magphase":
            fh.write("# freq_hz,mag_db,phase_deg\n")
            mag = 20.0 * np.log10(np.abs(table.values))
            ph = np.degrees(np.angle(table.values))
            for h, m, p in zip(table.freqs_hz, mag, ph):
                fh.write(f"{h:.17g},{m:.17g},{p:.17g}\n")
        else:
            raise ParseError(f"unknown FRF format {fmt!r}")


def interpolate(table: FrfTable, omega) -> complex:
    """Log-frequency interpolation: linear in log-magnitude, unwrapped phase.

    Exact at grid nodes; raises OutOfBand rather than extrapolating.
    """
    w = np.asarray(omega, float)
    lo, hi = table.band
    if np.any(w < lo) or np.any(w > hi):
        raise OutOfBand(f"omega outside measured band [{lo:g}, {hi:g}] rad/s")
    logf = np.log(table.freqs)
    mag = np.abs(table.values)
    logmag = np.log(np.maximum(mag, 1e-300))
    phase = np.unwrap(np.angle(table.values))
    lm = np.interp(np.log(w), logf, logmag)
    ph = np.interp(np.log(w), logf, phase)
    out = np.exp(lm) * np.exp(1j * ph)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LoopSamples:
    """Per-frequency responses of the open loop and its named factors."""

    omega: np.ndarray
    loop: np.ndarray        # L(jw) (or L'(jw) for the in-loop shaping variant)
    shaping: np.ndarray     # Cs(jw)
    reset_base: np.ndarray  # C_R(jw)


def compose_loop(plant, c_l1: RationalTF, c_r: RationalTF, c_l2: RationalTF,
                 c_s: RationalTF, grid, include_shaping_in_loop: bool = False) -> LoopSamples:
    """Evaluate L = C_L1 * C_R * C_L2 * G on a grid, factor by factor.

    ``plant`` is a RationalTF or a measured FrfTable (grid must stay in band).
    ``include_shaping_in_loop`` multiplies Cs into the loop (architecture with
    the shaping filter ahead of the reset element).
    """
    grid = np.asarray(grid, float)
    if isinstance(plant, FrfTable):
        g_vals = interpolate(plant, grid)
    else:
        g_vals = evaluate(plant, grid)
    loop = evaluate(c_l1, grid) * evaluate(c_r, grid) * evaluate(c_l2, grid) * g_vals
    cs_vals = evaluate(c_s, grid) * np.ones_like(grid, dtype=complex)
    if include_shaping_in_loop:
        loop = loop * cs_vals
    cr_vals = evaluate(c_r, grid) * np.ones_like(grid, dtype=complex)
    return LoopSamples(grid, np.asarray(loop, complex), cs_vals, cr_vals)
