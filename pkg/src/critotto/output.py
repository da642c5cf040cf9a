"""CSV rows, run manifests and content hashes."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .cycle import CycleConfig, CycleResult

RESULT_COLUMNS = ("E_A", "E_B", "E_C", "E_D", "Q_in", "Q_out", "W", "W_tilde", "excess",
                  "eta", "P", "regime")
CONFIG_COLUMNS = ("L", "h1", "h2", "T_H", "T_C", "tau1", "tau2")
CYCLE_COLUMNS = CONFIG_COLUMNS + RESULT_COLUMNS
TAUMIN_COLUMNS = ("T_C", "tau_min_grid", "tau_min_refined", "status", "W_tilde_abs", "P_abs")
ANALYTIC_COLUMNS = ("axis_value", "numeric_excess", "analytic_sum", "analytic_continuum",
                    "analytic_scaled", "rel_deviation")
FIT_COLUMNS = ("quantity", "slope", "intercept", "r_squared", "window_lo", "window_hi", "n_points")

MANIFEST_NAME = "manifest.txt"


def fmt(x) -> str:
    """Shortest round-trip text; absent values (None, NaN) become empty fields."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, int)) and not isinstance(x, float):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x + 0.0)  # folds -0.0 into 0.0


def result_fields(r: Optional[CycleResult]) -> list[str]:
    if r is None:
        return [""] * (len(RESULT_COLUMNS) - 1) + ["error"]
    values = [r.E_A, r.E_B, r.E_C, r.E_D, r.Q_in, r.Q_out, r.W, r.W_tilde, r.excess,
              r.eta, r.P, r.regime]
    return [fmt(v) for v in values]


def cycle_row(cfg: CycleConfig, r: CycleResult) -> list[str]:
    return [fmt(getattr(cfg, c)) for c in CONFIG_COLUMNS] + result_fields(r)


def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def parse_csv(text: str) -> tuple[list[str], list[dict[str, str]]]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    return list(reader.fieldnames or []), list(reader)


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


def column(rows: list[dict[str, str]], name: str) -> list[Optional[float]]:
    return [float(r[name]) if r.get(name) not in (None, "") else None for r in rows]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def manifest_text(sections: Mapping[str, Mapping[str, object]], files: Mapping[str, bytes]) -> str:
    """Key/value sections followed by ``sha256:<hex> <filename>`` lines."""
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        for key, value in entries.items():
            lines.append(f"{key} = {fmt(value) if not isinstance(value, str) else value}")
        lines.append("")
    lines.append("[files]")
    for fname in sorted(files):
        lines.append(f"sha256:{sha256_hex(files[fname])} {fname}")
    return "\n".join(lines) + "\n"


def write_outputs(out_dir: Path, files: Mapping[str, str],
                  sections: Mapping[str, Mapping[str, object]]) -> list[Path]:
    """Write every output plus the manifest; on failure remove what was written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {name: text.encode("utf-8") for name, text in files.items()}
    payload[MANIFEST_NAME] = manifest_text(sections, {k: v for k, v in payload.items()}).encode()
    written = []
    try:
        for name, data in payload.items():
            path = out_dir / name
            path.write_bytes(data)
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def verify_manifest(out_dir) -> bool:
    out_dir = Path(out_dir)
    text = (out_dir / MANIFEST_NAME).read_text(encoding="utf-8")
    in_files = False
    seen = 0
    for line in text.splitlines():
        if line == "[files]":
            in_files = True
            continue
        if in_files and line.startswith("sha256:"):
            digest, name = line[len("sha256:"):].split(" ", 1)
            if sha256_hex((out_dir / name).read_bytes()) != digest:
                return False
            seen += 1
    return seen > 0
