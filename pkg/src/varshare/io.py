"""CSV readers and writers for game tables, allocations, sweeps, and datasets.

All floats are written with 17 significant digits so that a write/read
round-trip reproduces every float64 bit-exactly.  Writers accept an optional
comment block; lines starting with ``#`` before the header are ignored by the
readers.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .coalitions import Allocation, AllocationMethod, Coalition, GameTable
from .errors import TableParseError

GAME_HEADER = ["coalition", "value"]
ALLOCATION_HEADER = ["player", "share", "method"]
SWEEP_HEADER = ["param_name", "param_value", "player", "shapley", "pme"]
REPORT_HEADER = [
    "player",
    "input",
    "method",
    "mean",
    "ci_low",
    "ci_high",
    "ci_level",
    "replications",
]


def format_float(x: float) -> str:
    """Render a float64 with enough digits to round-trip bit-exactly."""
    return format(float(x), ".17g")


def format_coalition(coalition: Coalition | int, d: int | None = None) -> str:
    """1-based "+"-joined member list; the empty coalition is "0"."""
    if isinstance(coalition, Coalition):
        return str(coalition)
    if d is None:
        raise ValueError("d is required when formatting a raw bitmask")
    return str(Coalition(coalition, d))


def parse_coalition(token: str, d: int | None = None) -> int:
    """Parse a 1-based "+"-joined coalition label into a bitmask."""
    token = token.strip()
    if token == "0":
        return 0
    bits = 0
    for part in token.split("+"):
        try:
            player = int(part)
        except ValueError:
            raise TableParseError(f"bad coalition label {token!r}") from None
        if player < 1 or (d is not None and player > d):
            raise TableParseError(f"player {player} out of range in label {token!r}")
        bit = 1 << (player - 1)
        if bits & bit:
            raise TableParseError(f"player {player} repeated in label {token!r}")
        bits |= bit
    return bits


def _open_out(path_or_file: str | Path | IO[str]):
    """Return (file, should_close)."""
    if hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, "w", newline=""), True


def _write_rows(
    path_or_file: str | Path | IO[str],
    header: Sequence[str],
    rows: Iterable[Sequence[str]],
    comment: str | None = None,
) -> None:
    f, should_close = _open_out(path_or_file)
    try:
        if comment:
            for line in comment.splitlines():
                f.write(f"# {line}\n" if line else "#\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if should_close:
            f.close()


def _read_rows(path_or_file: str | Path | IO[str], expected_header: Sequence[str]):
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        text = Path(path_or_file).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise TableParseError("file has no data rows")
    reader = csv.reader(_io.StringIO("\n".join(lines)))
    header = next(reader)
    if [h.strip() for h in header] != list(expected_header):
        raise TableParseError(
            f"expected header {','.join(expected_header)!r}, got {','.join(header)!r}"
        )
    return list(reader)


def write_game_csv(
    path_or_file: str | Path | IO[str], game: GameTable, comment: str | None = None
) -> None:
    """Write one row per coalition, ordered by cardinality then bitmask."""
    rows = (
        (format_coalition(mask, game.d), format_float(game.values[mask]))
        for mask in sorted(range(1 << game.d), key=lambda m: (m.bit_count(), m))
    )
    _write_rows(path_or_file, GAME_HEADER, rows, comment)


def read_game_csv(path_or_file: str | Path | IO[str]) -> GameTable:
    """Read a value table; every coalition of the inferred player set must appear."""
    rows = _read_rows(path_or_file, GAME_HEADER)
    entries: dict[int, float] = {}
    max_player = 0
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise TableParseError(f"row {lineno}: expected 2 fields, got {len(row)}")
        bits = parse_coalition(row[0])
        if bits:
            max_player = max(max_player, bits.bit_length())
        try:
            value = float(row[1])
        except ValueError:
            raise TableParseError(f"row {lineno}: bad value {row[1]!r}") from None
        if bits in entries:
            raise TableParseError(
                f"row {lineno}: duplicate coalition {format_coalition(bits, max(max_player, 1))!r}"
            )
        entries[bits] = value
    d = max(max_player, 1)
    missing = [m for m in range(1 << d) if m not in entries]
    if missing:
        labels = ", ".join(format_coalition(m, d) for m in missing[:8])
        more = "" if len(missing) <= 8 else f" (and {len(missing) - 8} more)"
        raise TableParseError(f"missing coalitions: {labels}{more}")
    values = np.array([entries[m] for m in range(1 << d)], dtype=np.float64)
    return GameTable.from_values(d, values)


def write_allocation_csv(
    path_or_file: str | Path | IO[str],
    allocation: Allocation,
    comment: str | None = None,
) -> None:
    rows = (
        (str(i + 1), format_float(allocation.shares[i]), allocation.method.value)
        for i in range(allocation.d)
    )
    _write_rows(path_or_file, ALLOCATION_HEADER, rows, comment)


def read_allocation_csv(path_or_file: str | Path | IO[str]) -> Allocation:
    rows = _read_rows(path_or_file, ALLOCATION_HEADER)
    shares: dict[int, float] = {}
    methods = set()
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise TableParseError(f"row {lineno}: expected 3 fields, got {len(row)}")
        try:
            player = int(row[0])
            share = float(row[1])
        except ValueError:
            raise TableParseError(f"row {lineno}: bad player or share") from None
        shares[player - 1] = share
        methods.add(row[2].strip())
    if sorted(shares) != list(range(len(shares))):
        raise TableParseError("players must be exactly 1..d")
    if len(methods) != 1:
        raise TableParseError(f"mixed methods in one file: {sorted(methods)}")
    try:
        method = AllocationMethod(methods.pop())
    except ValueError as exc:
        raise TableParseError(str(exc)) from None
    values = np.array([shares[i] for i in range(len(shares))])
    total = float(values.sum())
    return Allocation(values, total, method)


def write_sweep_csv(
    path_or_file: str | Path | IO[str],
    rows: Iterable[dict],
    comment: str | None = None,
) -> None:
    """Rows carry param_name, param_value, player (1-based), shapley, pme."""
    formatted = (
        (
            str(r["param_name"]),
            format_float(r["param_value"]),
            str(r["player"]),
            format_float(r["shapley"]),
            format_float(r["pme"]),
        )
        for r in rows
    )
    _write_rows(path_or_file, SWEEP_HEADER, formatted, comment)


def write_report_csv(
    path_or_file: str | Path | IO[str],
    rows: Iterable[dict],
    comment: str | None = None,
) -> None:
    """Per-player estimation summary: mean share and CI bounds per method."""
    formatted = (
        (
            str(r["player"]),
            str(r["input"]),
            str(r["method"]),
            format_float(r["mean"]),
            format_float(r["ci_low"]),
            format_float(r["ci_high"]),
            format_float(r["ci_level"]),
            str(r["replications"]),
        )
        for r in rows
    )
    _write_rows(path_or_file, REPORT_HEADER, formatted, comment)


def write_dataset_csv(
    path_or_file: str | Path | IO[str],
    x: np.ndarray,
    y: np.ndarray,
    comment: str | None = None,
) -> None:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    header = [f"x{j + 1}" for j in range(x.shape[1])] + ["y"]
    rows = (
        [format_float(v) for v in x[i]] + [format_float(y[i])]
        for i in range(x.shape[0])
    )
    _write_rows(path_or_file, header, rows, comment)


def read_dataset_csv(path_or_file: str | Path | IO[str]) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        text = Path(path_or_file).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise TableParseError("dataset file has no data rows")
    reader = csv.reader(_io.StringIO("\n".join(lines)))
    header = next(reader)
    header = [h.strip() for h in header]
    d = len(header) - 1
    if d < 1 or header != [f"x{j + 1}" for j in range(d)] + ["y"]:
        raise TableParseError(f"expected header x1,...,xd,y, got {','.join(header)!r}")
    xs, ys = [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != d + 1:
            raise TableParseError(f"row {lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise TableParseError(f"row {lineno}: bad numeric field") from None
        xs.append(vals[:d])
        ys.append(vals[d])
    return np.array(xs, dtype=np.float64), np.array(ys, dtype=np.float64)
