"""Coupling-table files: the bundled reference sets, ingestion, export.

A coupling table stores everything the spin simulator needs about one chain
configuration: ion positions, qubit splittings, normal-mode frequencies,
the spin-spin coupling matrix and the magnetic gradient that produced them.
Files are plain sectioned text with explicit units; all frequencies are
linear ("/2pi") in the file and converted to angular rad/s on ingestion.

Five reference tables for a segmented trap ship with the package (four-ion
chains in a harmonic well, in three separate wells, in two single
anharmonic-well variants, and a six-ion anharmonic chain); see
:func:`bundled_table_path`.

Couplings may be listed as ``pairs`` (one ``i j value`` line per pair,
1-based indices; pairs missing from the list are completed by mirror
symmetry J[i,j] = J[N+1-j,N+1-i]) or as a full ``matrix``.  Published
matrices can be slightly asymmetric; asymmetry is averaged away, and
relative asymmetry beyond 10% is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * np.pi

BUNDLED_TABLES = (
    "harmonic_well_4",
    "three_wells_4",
    "anharmonic_wide_4",
    "anharmonic_narrow_4",
    "anharmonic_6",
)

_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}
_FREQ_UNITS = {"Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6,
               "GHz": TWO_PI * 1e9}


@dataclass(frozen=True)
class CouplingTable:
    """One chain configuration, SI/angular units internally."""

    positions: np.ndarray  # m, ascending
    splittings: np.ndarray  # rad/s
    mode_frequencies: np.ndarray  # rad/s
    couplings: np.ndarray  # rad/s, symmetric, zero diagonal
    gradient: float  # T/m

    @property
    def n_ions(self) -> int:
        return self.positions.size

    def __post_init__(self):
        n = self.positions.size
        for name, arr in (("splittings", self.splittings),
                          ("mode_frequencies", self.mode_frequencies)):
            if np.asarray(arr).size != n:
                raise ConfigError(f"{name} length differs from the ion count")
        j = np.asarray(self.couplings)
        if j.shape != (n, n):
            raise ConfigError("coupling matrix shape differs from the ion count")
        if not np.all(np.diff(self.positions) > 0):
            raise ConfigError("positions must be strictly ascending")


def bundled_table_path(name: str) -> Path:
    """Filesystem path of a table shipped with the package."""
    if name not in BUNDLED_TABLES:
        raise ConfigError(
            f"unknown bundled table {name!r}; available: {', '.join(BUNDLED_TABLES)}")
    with resources.as_file(resources.files("ionchain") / "tables" / f"{name}.table") as p:
        return Path(p)


def load_bundled_table(name: str) -> CouplingTable:
    return ingest_table(bundled_table_path(name))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _read_sections(text: str):
    """Sectioned plain text -> {section: [(lineno, line), ...]}; '#' comments."""
    sections: dict[str, list] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError(f"line {lineno}: empty section name")
            if current in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: content before any [section]")
        sections[current].append((lineno, line))
    return sections


def _split_entries(entries):
    """Separate 'key = value' lines from bare data lines."""
    keys, data = {}, []
    for lineno, line in entries:
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key in keys:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            keys[key] = (lineno, value.strip())
        else:
            data.append((lineno, line.split()))
    return keys, data


def _unit_factor(units: dict, token: str, lineno: int) -> float:
    token = token.replace("µ", "u")  # micro sign
    if token not in units:
        raise ConfigError(
            f"line {lineno}: unit {token!r} not valid here (expected one of "
            f"{', '.join(units)})")
    return units[token]


def _indexed_column(section: str, keys, data, n: int, units: dict) -> np.ndarray:
    if "unit" not in keys:
        raise ConfigError(f"section [{section}] needs a 'unit = ...' line")
    lineno, unit = keys.pop("unit")
    factor = _unit_factor(units, unit, lineno)
    if keys:
        bad = next(iter(keys))
        raise ConfigError(f"line {keys[bad][0]}: unknown key {bad!r} in [{section}]")
    values = np.full(n, np.nan)
    for lineno, tokens in data:
        if len(tokens) != 2:
            raise ConfigError(f"line {lineno}: expected 'index value' in [{section}]")
        try:
            idx = int(tokens[0])
            val = float(tokens[1])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
        if not 1 <= idx <= n:
            raise ConfigError(f"line {lineno}: index {idx} outside 1..{n}")
        if not np.isnan(values[idx - 1]):
            raise ConfigError(f"line {lineno}: duplicate index {idx} in [{section}]")
        values[idx - 1] = val * factor
    if np.any(np.isnan(values)):
        missing = int(np.flatnonzero(np.isnan(values))[0]) + 1
        raise ConfigError(f"section [{section}]: missing entry for index {missing}")
    return values


def _couplings_block(keys, data, n: int) -> np.ndarray:
    if "unit" not in keys:
        raise ConfigError("section [couplings] needs a 'unit = ...' line")
    lineno, unit = keys.pop("unit")
    factor = _unit_factor(_FREQ_UNITS, unit, lineno)
    layout = "pairs"
    if "layout" in keys:
        _, layout = keys.pop("layout")
    if layout not in ("pairs", "matrix"):
        raise ConfigError("couplings layout must be 'pairs' or 'matrix'")
    if keys:
        bad = next(iter(keys))
        raise ConfigError(f"line {keys[bad][0]}: unknown key {bad!r} in [couplings]")

    if layout == "matrix":
        j = np.full((n, n), np.nan)
        for lineno, tokens in data:
            if len(tokens) != n + 1:
                raise ConfigError(
                    f"line {lineno}: matrix row needs an index plus {n} values")
            idx = int(tokens[0])
            if not 1 <= idx <= n:
                raise ConfigError(f"line {lineno}: row index {idx} outside 1..{n}")
            j[idx - 1] = [float(t) for t in tokens[1:]]
        if np.any(np.isnan(j)):
            raise ConfigError("section [couplings]: incomplete matrix")
        if np.abs(np.diag(j)).max() > 0.0:
            raise ConfigError("coupling matrix diagonal must be zero")
        scale = max(np.abs(j).max(), 1e-300)
        if np.abs(j - j.T).max() > 0.10 * scale:
            raise ConfigError("coupling matrix asymmetry exceeds 10%")
        return 0.5 * (j + j.T) * factor

    j = np.full((n, n), np.nan)
    np.fill_diagonal(j, 0.0)
    for lineno, tokens in data:
        if len(tokens) != 3:
            raise ConfigError(f"line {lineno}: expected 'i j value' in [couplings]")
        a, b = int(tokens[0]), int(tokens[1])
        val = float(tokens[2])
        if not (1 <= a <= n and 1 <= b <= n) or a == b:
            raise ConfigError(f"line {lineno}: bad pair ({a}, {b})")
        if not np.isnan(j[a - 1, b - 1]):
            raise ConfigError(f"line {lineno}: duplicate pair ({a}, {b})")
        j[a - 1, b - 1] = j[b - 1, a - 1] = val
    # Mirror completion: the reference tables list one value per
    # mirror-equivalent pair; J[i,j] = J[N+1-j,N+1-i] fills the rest.
    for a in range(n):
        for b in range(n):
            if np.isnan(j[a, b]) and not np.isnan(j[n - 1 - b, n - 1 - a]):
                j[a, b] = j[n - 1 - b, n - 1 - a]
    if np.any(np.isnan(j)):
        a, b = np.argwhere(np.isnan(j))[0]
        raise ConfigError(
            f"section [couplings]: pair ({a + 1}, {b + 1}) missing and not "
            "recoverable by mirror symmetry")
    return 0.5 * (j + j.T) * factor


def ingest_table(source) -> CouplingTable:
    """Parse a coupling-table file (path or text content)."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"table file not found: {path}")
        text = path.read_text()
    else:
        text = str(source)
    sections = _read_sections(text)
    if not sections:
        raise ConfigError("empty table file")
    required = {"table", "positions", "splittings", "modes", "couplings"}
    missing = required - sections.keys()
    if missing:
        raise ConfigError(f"table file missing sections: {', '.join(sorted(missing))}")
    unknown = sections.keys() - required
    if unknown:
        raise ConfigError(f"unknown table sections: {', '.join(sorted(unknown))}")

    keys, data = _split_entries(sections["table"])
    if data:
        raise ConfigError(f"line {data[0][0]}: unexpected data line in [table]")
    try:
        _, ions_text = keys.pop("ions")
        n = int(ions_text)
    except KeyError:
        raise ConfigError("section [table] needs 'ions = <count>'") from None
    if n < 2:
        raise ConfigError("a coupling table needs at least two ions")
    try:
        lineno, grad_text = keys.pop("gradient")
    except KeyError:
        raise ConfigError("section [table] needs 'gradient = <value> T/m'") from None
    parts = grad_text.split()
    if len(parts) != 2 or parts[1] != "T/m":
        raise ConfigError(f"line {lineno}: gradient must be given as '<value> T/m'")
    gradient = float(parts[0])
    if keys:
        bad = next(iter(keys))
        raise ConfigError(f"line {keys[bad][0]}: unknown key {bad!r} in [table]")

    positions = _indexed_column("positions",
                                *_split_entries(sections["positions"]), n,
                                _LENGTH_UNITS)
    splittings = _indexed_column("splittings",
                                 *_split_entries(sections["splittings"]), n,
                                 _FREQ_UNITS)
    modes = _indexed_column("modes", *_split_entries(sections["modes"]), n,
                            _FREQ_UNITS)
    couplings = _couplings_block(*_split_entries(sections["couplings"]), n)
    return CouplingTable(positions=positions, splittings=splittings,
                         mode_frequencies=modes, couplings=couplings,
                         gradient=gradient)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def format_table(table: CouplingTable, comment: str = "") -> str:
    """Render a table in the canonical file layout (round-trips losslessly).

    Positions are written in um, splittings in MHz, modes in kHz and
    couplings in Hz (all linear frequencies), matching the layout of the
    bundled reference tables.  Every i < j coupling pair is listed
    explicitly, so mirror completion is never needed on re-ingestion.
    """
    n = table.n_ions
    lines = []
    if comment:
        for row in comment.splitlines():
            lines.append(f"# {row}".rstrip())
    lines += ["[table]", f"ions = {n}", f"gradient = {table.gradient:.10g} T/m", ""]
    lines += ["[positions]", "unit = um"]
    lines += [f"{i + 1}  {table.positions[i] / 1e-6:.10g}" for i in range(n)]
    lines += ["", "[splittings]", "unit = MHz"]
    lines += [f"{i + 1}  {table.splittings[i] / (TWO_PI * 1e6):.10g}" for i in range(n)]
    lines += ["", "[modes]", "unit = kHz"]
    lines += [f"{i + 1}  {table.mode_frequencies[i] / (TWO_PI * 1e3):.10g}"
              for i in range(n)]
    lines += ["", "[couplings]", "unit = Hz", "layout = pairs"]
    for a in range(n):
        for b in range(a + 1, n):
            lines.append(f"{a + 1} {b + 1}  {table.couplings[a, b] / TWO_PI:.10g}")
    return "\n".join(lines) + "\n"


def solution_table(solution) -> CouplingTable:
    """A :class:`CouplingTable` view of a computed chain solution."""
    return CouplingTable(positions=np.asarray(solution.positions),
                         splittings=np.asarray(solution.splittings),
                         mode_frequencies=np.asarray(solution.mode_frequencies),
                         couplings=np.asarray(solution.couplings),
                         gradient=float(solution.gradient))
