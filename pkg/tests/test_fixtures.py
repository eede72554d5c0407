import hashlib

import pytest

from nonlocality import fixtures


@pytest.mark.parametrize("name", ["table2", "table3", "table4", "headline"])
def test_checksums_verify(name):
    fixtures.verify(name)


def test_every_file_has_a_checksum():
    assert set(fixtures.checksums()) == set(fixtures.FILES.values())


@pytest.mark.parametrize("name,count", fixtures.ROW_COUNTS.items())
def test_row_counts(name, count):
    assert len(fixtures.load(name).rows) == count


def test_table2_spot_values():
    t = fixtures.load("table2")
    first, second = t.rows[0], t.rows[1]
    assert (first["tau"], first["S_CHSH"], first["-E1-E2"], first["S_tau"]) == (1.001, 2.828, 0.052, 2.828)
    assert (second["S_tau"], second["dS_tau"], second["theta_deg"]) == (2.837, 0.010, 46.5)
    assert t.columns == ("tau", "S_CHSH", "-E1-E2", "S_tau", "dS_tau", "local_bound", "theta_deg")


def test_table3_spot_values():
    rows = {r["n"]: r for r in fixtures.load("table3").rows}
    assert sorted(rows) == list(range(2, 46))
    assert (rows[18]["I_n"], rows[18]["nu_n"], rows[18]["delta_n"], rows[18]["d_delta_n"]) == (
        0.1262, 0.0065, 0.5702, 0.0005)
    assert rows[2]["I_n"] == 0.5931


def test_table4_values():
    m3, m4 = fixtures.load("table4").rows
    assert m3["inequality"] == "M3322" and m3["a4"] is None
    assert [m4[k] for k in ("theta_deg", "a1", "a2", "a3", "a4")] == [76.6, 0, 61, 45, 119]
    assert [m3[k] for k in ("b1", "b2", "b3")] == [-0.7, 9.2, -20.3]


def test_headline_values():
    h = fixtures.headline()
    assert h["circle_mean_radius"] == 2.817
    assert h["chained_qmin_18"] == 0.874
    assert h["m4322_two_qubit"] == 7.041
    assert h["chained_best_n"] == 18


def test_tampering_is_detected(monkeypatch):
    real = fixtures._data

    def tampered(name):
        data = real(name)
        return data.replace(b"2.837", b"2.838") if name == "table2.csv" else data

    monkeypatch.setattr(fixtures, "_data", tampered)
    with pytest.raises(fixtures.FixtureCorrupted):
        fixtures.load("table2")


def test_checksum_file_format():
    for line in fixtures._data("SHA256SUMS").decode().splitlines():
        digest, fname = line.split()
        assert digest == hashlib.sha256(fixtures._data(fname)).hexdigest()
