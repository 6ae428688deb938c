"""Published reference tables: node-count searches and the heat error matrix.

Each row pairs a search configuration with the step and node count printed
for it, so computed and published values can be listed side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..kernels import Family
from ..subst import SubstChain

__all__ = ["PresetRow", "PRESETS", "preset_rows", "HEAT_TABLE", "HEAT_INV_STEPS", "NODE_BAND"]

NODE_BAND = 0.25
EPS_11 = (1e-1, 1e-3, 1e-5, 1e-7, 1e-9, 1e-11)
EPS_15 = EPS_11 + (1e-13, 1e-15)


@dataclass(frozen=True)
class PresetRow:
    family: Family
    n: int
    subst: SubstChain
    target_eps: float
    h0: float
    nodes: int

    def within_band(self, count: int, band: float = NODE_BAND) -> bool:
        return abs(count - self.nodes) <= band * self.nodes


def _rows(family, subst, table, eps=EPS_11):
    out = []
    for n, cells in table.items():
        for e, (h0, nodes) in zip(eps, cells):
            out.append(PresetRow(family, n, subst, e, h0, nodes))
    return out


_T1 = {
    3: [(0.264, 18), (0.137, 38), (0.072, 82), (0.055, 116), (0.043, 161), (0.036, 205)],
    4: [(0.198, 20), (0.095, 52), (0.072, 77), (0.051, 121), (0.040, 164), (0.033, 206)],
    5: [(0.181, 21), (0.088, 59), (0.065, 83), (0.060, 96), (0.037, 169), (0.033, 200)],
    6: [(0.156, 26), (0.090, 55), (0.059, 90), (0.044, 130), (0.035, 178), (0.029, 220)],
}
_T2 = {
    3: [(0.0297, 10), (0.0125, 28), (0.0077, 61), (0.0055, 111), (0.0042, 170), (0.0034, 247)],
    4: [(0.0234, 10), (0.0107, 30), (0.0070, 58), (0.0049, 107), (0.0037, 169), (0.0033, 217)],
    5: [(0.0380, 7), (0.0120, 27), (0.0069, 57), (0.0046, 112), (0.0034, 179), (0.0031, 221)],
    6: [(0.0185, 12), (0.0083, 36), (0.0058, 70), (0.0042, 117), (0.0037, 158), (0.0028, 242)],
}
_T3 = {
    3: [(0.295, 16), (0.133, 40), (0.072, 82), (0.055, 118), (0.043, 163), (0.036, 204)],
    4: [(0.198, 23), (0.095, 52), (0.072, 77), (0.051, 121), (0.040, 163), (0.033, 206)],
}
_T4 = {
    3: [(0.0297, 10), (0.0125, 30), (0.0077, 63), (0.0052, 114), (0.0042, 175), (0.0034, 234)],
    4: [(0.0197, 11), (0.0107, 30), (0.0074, 57), (0.0046, 120), (0.0037, 175), (0.0033, 222)],
}
_T5 = {
    0.01: [(0.99, 9), (0.72, 15), (0.58, 20), (0.47, 25), (0.39, 32), (0.30, 43), (0.26, 50), (0.25, 56)],
    0.1: [(0.98, 7), (0.68, 12), (0.58, 17), (0.42, 16), (0.40, 25), (0.29, 36), (0.25, 43), (0.23, 50)],
}
_T6 = {
    1.0: [(0.99, 6), (0.65, 10), (0.48, 15), (0.38, 20), (0.37, 22), (0.29, 28), (0.25, 34), (0.21, 42)],
    4.0: [(0.92, 5), (0.58, 9), (0.44, 13), (0.36, 17), (0.31, 21), (0.27, 25), (0.25, 29), (0.16, 46)],
}


def _yukawa_rows(table):
    out = []
    for a2, cells in table.items():
        fam = Family("K1", 1, a2**0.5)
        for e, (h0, nodes) in zip(EPS_15, cells):
            out.append(PresetRow(fam, 3, SubstChain.single(1.0), e, h0, nodes))
    return out


PRESETS: dict[str, list[PresetRow]] = {
    "table1": _rows(Family("I1"), SubstChain.waldvogel(1.0, 1.0), _T1),
    "table2": _rows(Family("I1"), SubstChain.waldvogel(6.0, 5.0), _T2),
    "table3": _rows(Family("IM", 2), SubstChain.waldvogel(1.0, 1.0), _T3),
    "table4": _rows(Family("IM", 2), SubstChain.waldvogel(6.0, 5.0), _T4),
    "table5": _yukawa_rows(_T5),
    "table6": _yukawa_rows(_T6),
}


def preset_rows(name: str) -> list[PresetRow]:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# Heat error |f_{h,tau} - f| at (x, t) = (0.01, 0.01), D = D0 = 2, for
# f_t - f_xx = x^2 + t^2. Rows: 1/tau, columns: 1/h.
HEAT_INV_STEPS = (4, 8, 16, 32, 64, 128)
HEAT_TABLE = (
    (1.25e-3, 7.81e-4, 6.64e-4, 6.35e-4, 6.27e-4, 6.25e-4),
    (7.81e-4, 3.12e-4, 1.95e-4, 1.66e-4, 1.58e-4, 1.56e-4),
    (6.64e-4, 1.95e-4, 7.81e-5, 4.88e-5, 4.15e-5, 3.96e-5),
    (6.34e-4, 1.66e-4, 4.88e-5, 1.95e-5, 1.22e-5, 1.03e-5),
    (6.27e-4, 1.58e-4, 4.15e-5, 1.22e-5, 4.88e-6, 3.05e-6),
    (6.25e-4, 1.56e-4, 3.96e-5, 1.03e-5, 3.05e-6, 1.22e-6),
)
