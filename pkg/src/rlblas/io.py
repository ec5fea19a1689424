"""CSV / plot-data output and the ``key = value`` run-config format."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .harness import CSV_FIELDS, BerRecord, ConfigError, RunConfig
from .rlb import RlbConfig

_INT_FIELDS = {"K", "N", "bits_total", "bit_errors"}
_STR_FIELDS = {"detector"}


def _fmt(value) -> str:
    # repr of a float is the shortest string that parses back to the same value
    return repr(value) if isinstance(value, float) else str(value)


def format_csv(records) -> str:
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def write_csv(records, path) -> Path:
    text = format_csv(records)
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path) -> list[BerRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(BerRecord(**{
                k: v if k in _STR_FIELDS else int(v) if k in _INT_FIELDS else float(v)
                for k, v in row.items()}))
    return out


def write_plotdata(records, path) -> Path:
    """Per-detector ``snr_db ber`` blocks, blank-line separated, ``# detector`` headers."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    blocks: dict[tuple, list[BerRecord]] = {}
    for r in records:
        blocks.setdefault((r.detector, r.K, r.N), []).append(r)
    lines = []
    for (det, k, n), recs in blocks.items():
        if lines:
            lines.append("")
        lines.append(f"# {det} K={k} N={n}")
        lines.extend(f"{_fmt(r.snr_db)} {_fmt(r.ber)}" for r in sorted(recs, key=lambda r: r.snr_db))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


_RUN_KEYS = {
    "K": int, "N": int, "runs": int, "vectors_per_run": int, "master_seed": int,
    "constellation_order": int, "snr_grid_db": _floats,
    "detectors": lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
    "channel_redraw": str.strip, "scale_mode": str.strip,
}
_RLB_KEYS = {"np_min": int, "c1": float, "max_restarts_cap": int}


def parse_run_config(text: str, **overrides) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a RunConfig.

    Keys mirror RunConfig fields, plus ``np_min``, ``c1`` and
    ``max_restarts_cap`` for the RLB-LAS detectors.  ``overrides`` win over
    the file.
    """
    run, rlb = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        try:
            if key in _RUN_KEYS:
                run[key] = _RUN_KEYS[key](value)
            elif key in _RLB_KEYS:
                rlb[key] = _RLB_KEYS[key](value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    run.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(rlb=RlbConfig(**rlb), **run)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_run_config(path, **overrides) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_run_config(text, **overrides)
