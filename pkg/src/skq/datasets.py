"""Istanbul stock exchange data: download helper, loader and a synthetic stand-in.

The canonical CSV has the header
``date,ISE_TL,ISE,SP,DAX,FTSE,NIKKEI,BOVESPA,EU,EM``, where ``ISE`` is the
USD-based index return. The loader drops ``date`` and ``ISE_TL`` and
predicts ``ISE`` from the seven market returns.
"""

from __future__ import annotations

import csv
import io
import urllib.request
import zipfile
from pathlib import Path

import numpy as np

from .evaluation import Dataset, load_dataset
from .model import FeatureSchema

ISTANBUL_URL = "https://archive.ics.uci.edu/static/public/247/istanbul+stock+exchange.zip"
ISTANBUL_COLUMNS = ("date", "ISE_TL", "ISE", "SP", "DAX", "FTSE", "NIKKEI", "BOVESPA", "EU", "EM")
ISTANBUL_INPUTS = ("SP", "DAX", "FTSE", "NIKKEI", "BOVESPA", "EU", "EM")


def load_istanbul(path) -> Dataset:
    return load_dataset(path, "ISE", drop=("date", "ISE_TL"), functor="ise")


def xlsx_rows_to_csv(rows, dest) -> int:
    """Write spreadsheet rows (two header rows, then data) as the canonical CSV."""
    written = 0
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ISTANBUL_COLUMNS)
        for row in rows:
            cells = list(row)[: len(ISTANBUL_COLUMNS)]
            try:
                values = [float(v) for v in cells[1:]]
            except (TypeError, ValueError):
                continue  # header rows
            writer.writerow([str(cells[0])] + [repr(v) for v in values])
            written += 1
    return written


def fetch_istanbul(dest, url: str = ISTANBUL_URL) -> Path:
    """Download the UCI archive and convert its spreadsheet to the canonical CSV.

    Needs network access and ``openpyxl``; never called by the test suite.
    """
    import openpyxl  # optional dependency, only for this conversion

    with urllib.request.urlopen(url, timeout=60) as response:
        archive = zipfile.ZipFile(io.BytesIO(response.read()))
    name = next(n for n in archive.namelist() if n.endswith(".xlsx"))
    book = openpyxl.load_workbook(io.BytesIO(archive.read(name)), read_only=True, data_only=True)
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    xlsx_rows_to_csv(book.active.iter_rows(values_only=True), dest)
    return dest


def synthetic_market(n: int = 536, seed: int = 0, noise: float = 0.015) -> Dataset:
    """Istanbul-shaped data: seven correlated daily returns and a noisy
    linear target dominated by ``EU`` and ``EM``."""
    rng = np.random.default_rng(seed)
    common = rng.normal(scale=0.01, size=n)
    X = np.column_stack([common + rng.normal(scale=0.01, size=n) for _ in ISTANBUL_INPUTS])
    coef = np.array([0.15, 0.1, 0.1, 0.1, 0.1, 0.9, 0.6])
    y = 0.001 + X @ coef + rng.normal(scale=noise, size=n)
    schema = FeatureSchema.continuous(ISTANBUL_INPUTS, "ISE", "ise")
    return Dataset(schema, {name: X[:, j] for j, name in enumerate(ISTANBUL_INPUTS)}, y)


def write_istanbul_like(dataset: Dataset, dest) -> None:
    """Write a dataset with the canonical Istanbul header (dates are row numbers)."""
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ISTANBUL_COLUMNS)
        for i in range(len(dataset)):
            y = float(dataset.targets[i])
            row = [f"d{i}", repr(y), repr(y)]
            row += [repr(float(dataset.columns[c][i])) for c in ISTANBUL_INPUTS]
            writer.writerow(row)
