import numpy as np
import pytest

from floodbound.errors import ValidationError
from floodbound.params.dataclasses import ReplicateMatrix
from floodbound.portfolio.io import load_events, load_portfolio, write_events, write_portfolio
from floodbound.simulation.export import (
    MAGIC,
    read_matrix_binary,
    read_matrix_csv,
    write_matrix_binary,
    write_matrix_csv,
)


PORTFOLIO_TEXT = "risk_id,total_insured_value,n_subrisks\nA,1000.0,4\nB,250.5,1\nC,3e6,12\n"


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _events_text(rows):
    return "year,event,risk_id,p,alpha,beta\n" + "".join(r + "\n" for r in rows)


def test_load_portfolio_and_events(tmp_path):
    port = load_portfolio(_write(tmp_path, "p.csv", PORTFOLIO_TEXT))
    assert port.risk_id.tolist() == ["A", "B", "C"]
    assert port.total_subrisks == 17
    assert port.exposure[0] == 250.0

    ev = load_events(_write(tmp_path, "e.csv", _events_text(["0,0,C,0.1,2,3", "1,0,A,0.5,1,1"])), port)
    assert len(ev) == 2
    assert ev.risk.tolist() == [2, 0]
    assert ev.exposure[0] == 3e6 / 12
    assert ev.n_sub.tolist() == [12, 4]


def test_round_trip_is_bit_exact(tmp_path, small_portfolio, small_events):
    p = write_portfolio(small_portfolio, tmp_path / "p.csv")
    e = write_events(small_events, tmp_path / "e.csv")
    port = load_portfolio(p)
    ev = load_events(e, port)
    assert np.array_equal(port.total_insured_value, small_portfolio.total_insured_value)
    assert np.array_equal(port.n_subrisks, small_portfolio.n_subrisks)
    for name in ("year", "event", "risk", "p", "alpha", "beta", "exposure", "n_sub"):
        assert np.array_equal(getattr(ev, name), getattr(small_events, name)), name


def test_bad_alpha_names_its_line(tmp_path):
    port = load_portfolio(_write(tmp_path, "p.csv", PORTFOLIO_TEXT))
    rows = [f"{i},0,A,0.1,2,3" for i in range(10)]
    rows[5] = "5,0,A,0.1,-2,3"
    with pytest.raises(ValidationError) as info:
        load_events(_write(tmp_path, "e.csv", _events_text(rows)), port)
    assert info.value.line == 7
    assert ":7:" in str(info.value)
    assert "alpha" in str(info.value)


@pytest.mark.parametrize(
    "row, fragment",
    [
        ("0,0,Z,0.1,2,3", "unknown risk_id"),
        ("0,0,A,1.5,2,3", "p must lie"),
        ("0,0,A,0.1,2,0", "beta"),
        ("0,0,A,abc,2,3", "malformed p"),
        ("-1,0,A,0.1,2,3", "year"),
    ],
)
def test_invalid_event_rows(tmp_path, row, fragment):
    port = load_portfolio(_write(tmp_path, "p.csv", PORTFOLIO_TEXT))
    with pytest.raises(ValidationError) as info:
        load_events(_write(tmp_path, "e.csv", _events_text(["0,0,B,0.1,2,3", row])), port)
    assert info.value.line == 3
    assert fragment in str(info.value)


def test_mu_cap_rejects_crowded_rows(tmp_path):
    port = load_portfolio(_write(tmp_path, "p.csv", PORTFOLIO_TEXT))
    path = _write(tmp_path, "e.csv", _events_text(["0,0,A,0.1,1,1", "0,1,A,0.1,96,4"]))
    assert len(load_events(path, port)) == 2
    with pytest.raises(ValidationError) as info:
        load_events(path, port, mu_cap=0.95)
    assert info.value.line == 3


def test_bad_headers_and_duplicates(tmp_path):
    with pytest.raises(ValidationError) as info:
        load_portfolio(_write(tmp_path, "p.csv", "id,value,n\nA,1,1\n"))
    assert info.value.line == 1
    with pytest.raises(ValidationError, match="duplicate"):
        load_portfolio(_write(tmp_path, "d.csv", PORTFOLIO_TEXT + "A,5,1\n"))
    with pytest.raises(ValidationError, match="n_subrisks"):
        load_portfolio(_write(tmp_path, "n.csv", "risk_id,total_insured_value,n_subrisks\nA,5,0\n"))
    with pytest.raises(ValidationError, match="not found"):
        load_portfolio(tmp_path / "missing.csv")


def test_empty_event_files_give_zero_years(tmp_path):
    port = load_portfolio(_write(tmp_path, "p.csv", PORTFOLIO_TEXT))
    header_only = load_events(_write(tmp_path, "e.csv", _events_text([])), port)
    zero_bytes = load_events(_write(tmp_path, "z.csv", ""), port)
    for ev in (header_only, zero_bytes):
        assert len(ev) == 0
        assert ev.years.size == 0


# ---------------------------------------------------------------------
# replicate matrices
# ---------------------------------------------------------------------

def _matrix():
    rng = np.random.default_rng(0)
    return ReplicateMatrix(values=rng.gamma(2.0, 1e6, (7, 4)), years=np.array([0, 3, 5, 9]), method="sir-F+", seed=11)


def test_matrix_csv_round_trip(tmp_path):
    m = _matrix()
    back = read_matrix_csv(write_matrix_csv(m, tmp_path / "m.csv"), method=m.method, seed=m.seed)
    assert np.array_equal(back.values, m.values)
    assert np.array_equal(back.years, m.years)
    assert (back.M, back.n_years) == (7, 4)


def test_matrix_binary_round_trip_and_checks(tmp_path):
    m = _matrix()
    path = write_matrix_binary(m, tmp_path / "m.bin")
    data = path.read_bytes()
    assert data[:8] == MAGIC

    back = read_matrix_binary(path)
    assert np.array_equal(back.values, m.values)
    assert np.array_equal(back.years, m.years)
    assert back.method == "sir-F+" and back.seed == 11

    (tmp_path / "short.bin").write_bytes(data[:-8])
    with pytest.raises(ValidationError, match="truncated"):
        read_matrix_binary(tmp_path / "short.bin")
    (tmp_path / "bad.bin").write_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(ValidationError, match="magic"):
        read_matrix_binary(tmp_path / "bad.bin")


def test_matrix_csv_rejects_missing_cells(tmp_path):
    path = _write(tmp_path, "m.csv", "replicate,year,total\n0,0,1.0\n0,1,2.0\n1,0,3.0\n")
    with pytest.raises(ValidationError, match="missing"):
        read_matrix_csv(path)


def test_matrix_csv_takes_its_tag_from_the_file_name(tmp_path):
    m = _matrix()
    back = read_matrix_csv(write_matrix_csv(m, tmp_path / "matrix_sir-F+.csv"))
    assert back.method == "sir-F+"
    assert read_matrix_csv(write_matrix_csv(m, tmp_path / "lower.csv")).method == "lower"
    assert read_matrix_csv(tmp_path / "lower.csv", method="direct-F-").method == "direct-F-"


def test_matrix_binary_rejects_missing_and_short_files(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        read_matrix_binary(tmp_path / "absent.bin")

    (tmp_path / "stub.bin").write_bytes(MAGIC + b"\x01")
    with pytest.raises(ValidationError, match="truncated matrix header"):
        read_matrix_binary(tmp_path / "stub.bin")

    data = write_matrix_binary(_matrix(), tmp_path / "m.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(data[:20])
    with pytest.raises(ValidationError, match="truncated"):
        read_matrix_binary(tmp_path / "cut.bin")
