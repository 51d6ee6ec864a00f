"""File formats: model documents, observation CSV, TSV reports.

The model document is a plain-text key-value format::

    hmmkld-model v1
    states 3
    initial 0.5 0.25 0.25
    transition
    0.9 0.05 0.05
    0.1 0.8 0.1
    0.2 0.2 0.6
    emission gaussian_homoscedastic
    means -0.372 0.069 -0.068
    sigma 0.114

Emission tags are ``discrete`` (followed by ``symbols K`` and K-column
probability rows), ``gaussian_homoscedastic`` (``means`` + ``sigma``) and
``gaussian`` (``means`` + ``sigmas``). Floats are written with shortest
round-trip precision so rewriting a parsed document is byte-stable.
"""

import csv
import io
from typing import List, Optional, Tuple

import numpy as np

from .influence import InfluenceProfile, WindowInfluenceProfile
from .model import (
    DiscreteEmission,
    GaussianEmission,
    HmmModel,
    ObservationSequence,
)

MODEL_HEADER = "hmmkld-model v1"


class DataFormatError(ValueError):
    """Malformed input file; message carries the offending line number."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_row(row) -> str:
    return " ".join(_fmt(v) for v in row)


def dump_model(model: HmmModel) -> str:
    lines = [MODEL_HEADER, f"states {model.num_states}"]
    lines.append("initial " + _fmt_row(model.initial))
    lines.append("transition")
    for row in model.transition:
        lines.append(_fmt_row(row))
    em = model.emission
    if isinstance(em, DiscreteEmission):
        lines.append("emission discrete")
        lines.append(f"symbols {em.num_symbols}")
        for row in em.table:
            lines.append(_fmt_row(row))
    elif em.is_homoscedastic:
        lines.append("emission gaussian_homoscedastic")
        lines.append("means " + _fmt_row(em.means))
        lines.append("sigma " + _fmt(em.sigmas[0]))
    else:
        lines.append("emission gaussian")
        lines.append("means " + _fmt_row(em.means))
        lines.append("sigmas " + _fmt_row(em.sigmas))
    return "\n".join(lines) + "\n"


def write_model(model: HmmModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_model(model))


class _LineReader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> Tuple[int, str]:
        while self.pos < len(self.lines):
            self.pos += 1
            line = self.lines[self.pos - 1].strip()
            if line and not line.startswith("#"):
                return self.pos, line
        raise DataFormatError("unexpected end of model document")

    def floats(self, count: int, what: str) -> np.ndarray:
        lineno, line = self.next()
        parts = line.split()
        try:
            values = np.array([float(p) for p in parts])
        except ValueError:
            raise DataFormatError(f"line {lineno}: {what}: not a number row")
        if values.size != count:
            raise DataFormatError(
                f"line {lineno}: {what}: expected {count} values, got {values.size}"
            )
        return values


def parse_model(text: str) -> HmmModel:
    reader = _LineReader(text)
    lineno, header = reader.next()
    if header != MODEL_HEADER:
        raise DataFormatError(f"line {lineno}: expected '{MODEL_HEADER}'")
    lineno, line = reader.next()
    if not line.startswith("states "):
        raise DataFormatError(f"line {lineno}: expected 'states <m>'")
    try:
        m = int(line.split()[1])
    except ValueError:
        raise DataFormatError(f"line {lineno}: state count is not an integer")
    initial = _keyword_row(reader, "initial", m)
    lineno, line = reader.next()
    if line != "transition":
        raise DataFormatError(f"line {lineno}: expected 'transition' section")
    transition = np.vstack([reader.floats(m, "transition row") for _ in range(m)])
    lineno, line = reader.next()
    parts = line.split()
    if parts[0] != "emission" or len(parts) != 2:
        raise DataFormatError(f"line {lineno}: expected 'emission <type>'")
    tag = parts[1]
    if tag == "discrete":
        lineno, line = reader.next()
        if not line.startswith("symbols "):
            raise DataFormatError(f"line {lineno}: expected 'symbols <k>'")
        try:
            k = int(line.split()[1])
        except ValueError:
            raise DataFormatError(f"line {lineno}: symbol count is not an integer")
        table = np.vstack([reader.floats(k, "emission row") for _ in range(m)])
        emission = DiscreteEmission(table)
    elif tag == "gaussian_homoscedastic":
        means = _keyword_row(reader, "means", m)
        sigma = _keyword_row(reader, "sigma", 1)
        emission = GaussianEmission.homoscedastic(means, sigma[0])
    elif tag == "gaussian":
        means = _keyword_row(reader, "means", m)
        sigmas = _keyword_row(reader, "sigmas", m)
        emission = GaussianEmission(means, sigmas)
    else:
        raise DataFormatError(f"line {lineno}: unknown emission type {tag!r}")
    return HmmModel(initial, transition, emission)


def _keyword_row(reader: _LineReader, keyword: str, count: int) -> np.ndarray:
    lineno, line = reader.next()
    parts = line.split()
    if parts[0] != keyword:
        raise DataFormatError(f"line {lineno}: expected '{keyword}' row")
    try:
        values = np.array([float(p) for p in parts[1:]])
    except ValueError:
        raise DataFormatError(f"line {lineno}: {keyword}: not a number row")
    if values.size != count:
        raise DataFormatError(
            f"line {lineno}: {keyword}: expected {count} values, got {values.size}"
        )
    return values


def read_model(path) -> HmmModel:
    with open(path) as fh:
        return parse_model(fh.read())


def read_observations(path) -> ObservationSequence:
    with open(path) as fh:
        return parse_observations_csv(fh.read(), source=str(path))


def parse_observations_csv(text: str, source: str = "<csv>") -> ObservationSequence:
    """CSV with an optional header and either (label, value) or value rows."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(i + 1, row) for i, row in enumerate(rows) if any(f.strip() for f in row)]
    if not rows:
        raise DataFormatError(f"{source}: no data rows")
    labels: Optional[List[str]] = None
    values: List[float] = []
    start = 0
    first = rows[0][1]
    if not _is_number(first[-1].strip()):
        start = 1  # header row
        if len(rows) == 1:
            raise DataFormatError(f"{source}: no data rows after header")
    width = len(rows[start][1])
    if width not in (1, 2):
        raise DataFormatError(
            f"{source}: line {rows[start][0]}: expected 1 or 2 columns, got {width}"
        )
    if width == 2:
        labels = []
    for lineno, row in rows[start:]:
        if len(row) != width:
            raise DataFormatError(
                f"{source}: line {lineno}: expected {width} columns, got {len(row)}"
            )
        raw = row[-1].strip()
        if not _is_number(raw):
            raise DataFormatError(f"{source}: line {lineno}: not a number: {raw!r}")
        values.append(float(raw))
        if labels is not None:
            labels.append(row[0].strip())
    return ObservationSequence(np.array(values), labels=labels)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def influence_tsv(profile: InfluenceProfile, labels: Optional[List[str]] = None) -> str:
    """TSV with columns label, K, p_loo_1..m, p_post_1..m."""
    n, m = profile.marginals.shape
    if labels is None:
        labels = list(profile.labels) if profile.labels else [str(i + 1) for i in range(n)]
    header = (
        ["label", "K"]
        + [f"p_loo_{s + 1}" for s in range(m)]
        + [f"p_post_{s + 1}" for s in range(m)]
    )
    lines = ["\t".join(header)]
    for j in range(n):
        fields = [labels[j], _fmt(profile.k[j])]
        fields += [_fmt(v) for v in profile.loo_marginals[j]]
        fields += [_fmt(v) for v in profile.marginals[j]]
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def window_influence_tsv(
    profile: WindowInfluenceProfile, labels: Optional[List[str]] = None
) -> str:
    """TSV with columns label, K; label marks the window start."""
    n = len(profile)
    if labels is None:
        labels = list(profile.labels) if profile.labels else [str(i + 1) for i in range(n)]
    lines = ["label\tK"]
    for j in range(n):
        lines.append(f"{labels[j]}\t{_fmt(profile.k[j])}")
    return "\n".join(lines) + "\n"
