"""Normal-incidence transfer-matrix optics for planar thin-film stacks.

Complex indices are ``n + ik`` with ``k >= 0`` for absorption (fields vary as
``exp(i(kz - wt))``). The nanowire meander is replaced by a planar
effective-medium layer.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidMaterial, InvalidParameter, MissingMaterial, StagnantOptimization

Index = Union[complex, float, "Dispersion", "EffectiveMedium"]


@dataclass(frozen=True)
class Dispersion:
    """Tabulated ``n(λ), k(λ)``, linearly interpolated and clamped at the ends."""

    name: str
    wavelength_nm: tuple
    n: tuple
    k: tuple

    def __call__(self, wavelength_nm: float) -> complex:
        wl = np.asarray(self.wavelength_nm)
        n = np.interp(wavelength_nm, wl, self.n)
        k = np.interp(wavelength_nm, wl, self.k)
        return complex(n, k)


@dataclass(frozen=True)
class EffectiveMedium:
    wire: Index
    gap: Index
    fill: float
    name: str = "ema"

    def __call__(self, wavelength_nm: float) -> complex:
        return effective_index(index_at(self.wire, wavelength_nm), index_at(self.gap, wavelength_nm), self.fill)


def index_at(index: Index, wavelength_nm: float) -> complex:
    n = index(wavelength_nm) if callable(index) else complex(index)
    if not (math.isfinite(n.real) and math.isfinite(n.imag)):
        raise InvalidMaterial(f"refractive index is not finite: {n}")
    if n.real <= 0 or n.imag < 0:
        raise InvalidMaterial(f"refractive index must have n > 0 and k >= 0, got {n}")
    return n


@dataclass(frozen=True)
class Layer:
    thickness_nm: float
    refractive_index: Index
    material: str = ""

    def __post_init__(self):
        if not self.thickness_nm >= 0:
            raise InvalidParameter(f"layer thickness must be >= 0, got {self.thickness_nm}")


@dataclass(frozen=True)
class LayerStack:
    """Layers ordered from the incidence side down to the substrate."""

    layers: tuple
    incidence: Index = 1.0
    substrate: Index = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def with_thicknesses(self, thicknesses: dict) -> "LayerStack":
        layers = list(self.layers)
        for i, d in thicknesses.items():
            layers[i] = replace(layers[i], thickness_nm=float(d))
        return replace(self, layers=tuple(layers))

    def reversed(self) -> "LayerStack":
        return LayerStack(tuple(reversed(self.layers)), self.substrate, self.incidence)

    @property
    def thicknesses(self) -> list:
        return [l.thickness_nm for l in self.layers]


@dataclass(frozen=True)
class SpectrumPoint:
    wavelength_nm: float
    R: float
    T: float
    A: float


def effective_index(n_wire: complex, n_gap: complex, fill: float) -> complex:
    """Fill-weighted permittivity average (field parallel to the wires)."""
    if not 0 <= fill <= 1:
        raise InvalidParameter(f"fill factor must be in [0, 1], got {fill}")
    eps = fill * complex(n_wire) ** 2 + (1 - fill) * complex(n_gap) ** 2
    n = np.sqrt(eps)
    if n.imag < 0 or (n.imag == 0 and n.real < 0):
        n = -n
    return complex(n)


def characteristic_matrix(n: complex, d_nm: float, wavelength_nm: float) -> np.ndarray:
    delta = 2 * np.pi * n * d_nm / wavelength_nm
    c, s = np.cos(delta), np.sin(delta)
    return np.array([[c, -1j * s / n], [-1j * n * s, c]])


def solve(stack: LayerStack, wavelength_nm: float) -> SpectrumPoint:
    """Reflectance, transmittance and absorptance at one wavelength."""
    if not wavelength_nm > 0:
        raise InvalidParameter("wavelength must be positive")
    n0 = index_at(stack.incidence, wavelength_nm)
    ns = index_at(stack.substrate, wavelength_nm)
    if abs(n0.imag) > 0:
        raise InvalidMaterial("incidence medium must be lossless")
    M = np.eye(2, dtype=complex)
    for layer in stack.layers:
        if layer.thickness_nm == 0:
            continue
        n = index_at(layer.refractive_index, wavelength_nm)
        M = M @ characteristic_matrix(n, layer.thickness_nm, wavelength_nm)
    B, C = M @ np.array([1.0, ns])
    denom = n0 * B + C
    r = (n0 * B - C) / denom
    t = 2 * n0 / denom
    R = float(abs(r) ** 2)
    T = float(ns.real / n0.real * abs(t) ** 2)
    return SpectrumPoint(float(wavelength_nm), R, T, 1.0 - R - T)


def spectrum(stack: LayerStack, wavelengths: Sequence[float]) -> list:
    return [solve(stack, wl) for wl in wavelengths]


@dataclass
class OptimizationResult:
    stack: LayerStack
    absorption: float
    start_absorption: float
    stagnant: bool
    restarts: list = field(default_factory=list, repr=False)


def optimize_thicknesses(stack: LayerStack, free_layer_indices: Sequence[int], target_wavelength: float,
                         bounds: Optional[Sequence[tuple]] = None, restarts: int = 8, seed: int = 0,
                         xatol: float = 1e-3, fatol: float = 1e-12) -> OptimizationResult:
    """Maximize absorptance at ``target_wavelength`` over the free layer thicknesses.

    Bounded Nelder-Mead from the given stack and from ``restarts - 1`` seeded
    random points inside the bounds (default ``[0, 400]`` nm per layer).
    """
    free = list(free_layer_indices)
    if not free:
        raise InvalidParameter("need at least one free layer")
    if bounds is None:
        bounds = [(0.0, 400.0)] * len(free)
    lo = np.array([b[0] for b in bounds], float)
    hi = np.array([b[1] for b in bounds], float)

    def absorb(d):
        d = np.clip(d, lo, hi)
        return solve(stack.with_thicknesses(dict(zip(free, d))), target_wavelength).A

    x0 = np.clip(np.array([stack.layers[i].thickness_nm for i in free], float), lo, hi)
    start = absorb(x0)
    rng = np.random.default_rng(seed)
    starts = [x0] + [lo + (hi - lo) * rng.random(len(free)) for _ in range(max(restarts, 1) - 1)]
    best_x, best_a = x0, start
    tried = []
    for s in starts:
        res = minimize(lambda d: -absorb(d), s, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"xatol": xatol, "fatol": fatol, "maxiter": 4000 * len(free)})
        a = -float(res.fun)
        tried.append((np.clip(res.x, lo, hi), a))
        if a > best_a:
            best_x, best_a = np.clip(res.x, lo, hi), a
    stagnant = best_a <= start + 1e-12
    if stagnant:
        warnings.warn("thickness optimization found no improvement over the starting stack",
                      StagnantOptimization, stacklevel=2)
    best = stack.with_thicknesses(dict(zip(free, best_x)))
    return OptimizationResult(best, best_a, start, stagnant, tried)


# -- files -------------------------------------------------------------------


def load_material_table(path) -> dict:
    """``material,wavelength_nm,n,k`` CSV (``#`` comments allowed) -> name: Dispersion."""
    rows: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if line.strip() and not line.lstrip().startswith("#"))
        for r in reader:
            name = r["material"].strip()
            rows.setdefault(name, []).append((float(r["wavelength_nm"]), float(r["n"]), float(r["k"])))
    table = {}
    for name, pts in rows.items():
        pts.sort()
        wl, n, k = zip(*pts)
        if any(not math.isfinite(v) for v in n + k):
            raise InvalidMaterial(f"material {name!r} has non-finite index values")
        table[name] = Dispersion(name, wl, n, k)
    return table


def _resolve(name: str, materials: dict) -> Index:
    name = name.strip()
    if name.startswith("ema(") and name.endswith(")"):
        parts = [p.strip() for p in name[4:-1].split(",")]
        if len(parts) != 3:
            raise InvalidParameter(f"effective medium needs ema(wire,gap,fill): {name}")
        return EffectiveMedium(_resolve(parts[0], materials), _resolve(parts[1], materials), float(parts[2]), name)
    if name in materials:
        return materials[name]
    try:
        return complex(name.replace("i", "j"))
    except ValueError:
        raise MissingMaterial(f"material {name!r} not found in the material table") from None


def parse_stack(text: str, materials: dict) -> LayerStack:
    """Plain-text stack: one ``<material> <thickness_nm>`` per line, top to bottom.

    ``incidence <material>`` and ``substrate <material>`` name the bounding
    media; ``ema(wire,gap,fill)`` builds an effective-medium layer.
    """
    incidence, substrate = "1.0", "1.0"
    layers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "incidence":
            incidence = rest
        elif key == "substrate":
            substrate = rest
        else:
            try:
                d = float(rest)
            except ValueError:
                raise InvalidParameter(f"stack line {lineno}: expected '<material> <thickness_nm>'") from None
            layers.append(Layer(d, _resolve(key, materials), key))
    return LayerStack(tuple(layers), _resolve(incidence, materials), _resolve(substrate, materials))


def load_stack(path, materials: dict) -> LayerStack:
    return parse_stack(Path(path).read_text(), materials)


def write_spectrum_csv(points, path, comment: Optional[str] = None):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wavelength_nm", "R", "T", "A"])
        for p in points:
            w.writerow([repr(p.wavelength_nm), f"{p.R:.12g}", f"{p.T:.12g}", f"{p.A:.12g}"])
