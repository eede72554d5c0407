"""Published tables shipped as data files, checked against committed SHA-256 sums."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

FILES = {
    "table2": "table2.csv",
    "table3": "table3.csv",
    "table4": "table4.csv",
    "headline": "headline.json",
}
ROW_COUNTS = {"table2": 22, "table3": 44, "table4": 2}


class FixtureCorrupted(RuntimeError):
    pass


@dataclass(frozen=True)
class Fixture:
    name: str
    columns: tuple[str, ...]
    rows: tuple[dict, ...]

    def column(self, key: str) -> list:
        return [r[key] for r in self.rows]


def _data(name: str) -> bytes:
    return resources.files("nonlocality").joinpath("data").joinpath(name).read_bytes()


def checksums() -> dict[str, str]:
    out = {}
    for line in _data("SHA256SUMS").decode().splitlines():
        digest, fname = line.split()
        out[fname] = digest
    return out


def verify(name: str) -> None:
    fname = FILES[name]
    digest = hashlib.sha256(_data(fname)).hexdigest()
    if checksums()[fname] != digest:
        raise FixtureCorrupted(f"{fname} does not match its committed checksum")


def _num(text: str):
    if text == "N/A":
        return None
    value = float(text)
    return int(value) if text.lstrip("-").isdigit() else value


def load(name: str) -> Fixture:
    verify(name)
    if name == "headline":
        data = json.loads(_data(FILES[name]))
        return Fixture(name, tuple(data), (data,))
    reader = csv.DictReader(_data(FILES[name]).decode().splitlines())
    rows = []
    for raw in reader:
        rows.append({k: (v if k == "inequality" else _num(v)) for k, v in raw.items()})
    fx = Fixture(name, tuple(reader.fieldnames), tuple(rows))
    if len(fx.rows) != ROW_COUNTS[name]:
        raise FixtureCorrupted(f"{name}: expected {ROW_COUNTS[name]} rows, found {len(fx.rows)}")
    return fx


def headline() -> dict:
    return load("headline").rows[0]
