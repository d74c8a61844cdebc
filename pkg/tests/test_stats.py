import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm, rankdata

from covns.stats import (
    ResultMatrix,
    ResultsFormatError,
    aggregate,
    analyze,
    format_report,
    friedman_ranks,
    holm_posthoc,
    read_results_csv,
    write_report_csv,
)

import reference_results as ref


def welford(xs):
    n, mean, m2 = 0, 0.0, 0.0
    for x in xs:
        n += 1
        d = x - mean
        mean += d / n
        m2 += d * (x - mean)
    return mean, math.sqrt(m2 / n)


def test_aggregate_examples():
    assert aggregate([0.3]) == (0.3, 0.3, 0.0)
    mean, best, std = aggregate([0.2, 0.4])
    assert mean == pytest.approx(0.3, abs=1e-15)
    assert best == 0.4
    assert std == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(ValueError):
        aggregate([])


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=50))
def test_aggregate_matches_streaming(xs):
    mean, best, std = aggregate(xs)
    wm, ws = welford(xs)
    assert mean == pytest.approx(wm, abs=1e-12)
    assert std == pytest.approx(ws, abs=1e-9)
    assert best == max(xs)


def test_full_tie_shares_middle_rank():
    assert friedman_ranks([[0.5, 0.1], [0.5, 0.1]]).tolist() == [1.5, 1.5]


@settings(max_examples=100)
@given(st.integers(2, 6), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_ranks_match_scipy_and_sum(k, n, seed):
    rng = np.random.default_rng(seed)
    means = rng.integers(0, 4, (k, n)) / 4.0  # coarse values force ties
    got = friedman_ranks(means)
    expected = np.mean([rankdata(-means[:, j]) for j in range(n)], axis=0)
    assert np.allclose(got, expected, atol=1e-12)
    assert got.sum() * n == pytest.approx(n * k * (k + 1) / 2)


@given(st.integers(2, 5), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_ranks_invariant_under_monotone_transform(k, n, seed):
    means = np.random.default_rng(seed).random((k, n))
    assert np.array_equal(friedman_ranks(means), friedman_ranks(np.exp(3 * means) - 7))


def test_oi_table():
    report = analyze(ref.matrix_from_means(ref.OI_MEANS, ref.OI_NAMES), "covns")
    for a, r in ref.OI_RANKS.items():
        assert report.mean_ranks[a] == pytest.approx(r, abs=1e-4)
    for a in ("pvns", "svns"):
        assert report.unadjusted_p[a] == pytest.approx(ref.OI_UNADJUSTED[a], abs=1e-6)
        assert report.adjusted_p[a] == pytest.approx(ref.OI_ADJUSTED[a], abs=1e-6)


def test_ui_table_ranks_and_adjusted():
    report = analyze(ref.matrix_from_means(ref.UI_MEANS, ref.UI_NAMES), "covns")
    for a, r in ref.UI_RANKS.items():
        assert report.mean_ranks[a] == pytest.approx(r, abs=1e-4)
    for a in ("pvns", "svns"):
        assert report.adjusted_p[a] == pytest.approx(ref.UI_ADJUSTED[a], abs=1e-6)
    # the smaller rank gap gives the larger p
    assert report.unadjusted_p["pvns"] == pytest.approx(0.455545, abs=1e-6)
    assert report.unadjusted_p["svns"] == pytest.approx(0.240955, abs=1e-6)
    assert sorted(report.unadjusted_p.values()) == pytest.approx(sorted(ref.UI_UNADJUSTED.values()), abs=1e-6)


def test_normal_tail_against_scipy():
    ranks = {"a": 1.0, "b": 1.9, "c": 2.6, "d": 3.5}
    unadj, _ = holm_posthoc(ranks, 7, "a")
    se = math.sqrt(4 * 5 / 42)
    for name in "bcd":
        assert unadj[name] == pytest.approx(2 * norm.sf(abs(ranks[name] - 1.0) / se), rel=1e-12)


@settings(max_examples=100)
@given(st.lists(st.floats(1, 5), min_size=2, max_size=7), st.integers(1, 30))
def test_holm_properties(ranks, n):
    names = [f"a{i}" for i in range(len(ranks))]
    unadj, adj = holm_posthoc(dict(zip(names, ranks)), n, names[0])
    order = sorted(unadj, key=unadj.get)
    assert all(adj[a] >= unadj[a] - 1e-15 for a in unadj)
    assert all(adj[a] <= 1.0 for a in adj)
    assert all(adj[x] <= adj[y] for x, y in zip(order, order[1:]))


def test_holm_rejects_bad_input():
    with pytest.raises(KeyError):
        holm_posthoc({"a": 1.0, "b": 2.0}, 3, "z")
    with pytest.raises(ValueError):
        holm_posthoc({"a": 1.0}, 3, "a")


def test_single_algorithm_report():
    m = ResultMatrix()
    m.add("covns", "x", 0.2)
    m.add("covns", "y", 0.3)
    report = analyze(m)
    assert report.mean_ranks == {"covns": 1.0} and report.unadjusted_p == {}
    assert "covns" in format_report(m, report)


def test_default_control_is_best_ranked():
    report = analyze(ref.matrix_from_means(ref.OI_MEANS, ref.OI_NAMES))
    assert report.control == "covns"


def test_csv_round_trip_and_report(tmp_path):
    text = "algorithm,instance,run_index,fitness\n" + "".join(
        f"{a},{i},{r},{v}\n" for a, row in ref.OI_MEANS.items() for i, v in zip(ref.OI_NAMES, row) for r in (0,)
    )
    m = read_results_csv(io.StringIO(text))
    assert m.algorithms == ["covns", "pvns", "svns"] and m.instances == ref.OI_NAMES
    report = analyze(m, "covns")
    out = tmp_path / "r.csv"
    write_report_csv(out, m, report)
    assert out.read_text().count("\n") == 3 * 11 + 3 + 1


@pytest.mark.parametrize("text, line", [
    ("algorithm,instance,fitness\nx,y,0.1\n", 1),
    ("algorithm,instance,run_index,fitness\na,b,0,0.1\na,b,0,abc\n", 3),
    ("algorithm,instance,run_index,best_fitness\na,b,0,0.1\na,,1,0.2\n", 3),
    ("algorithm,instance,run_index,fitness\na,b,0,nan\n", 2),
])
def test_csv_errors_name_the_line(text, line):
    with pytest.raises(ResultsFormatError, match=f"line {line}"):
        read_results_csv(io.StringIO(text))


def test_unequal_cells_rejected():
    m = ResultMatrix()
    m.add("a", "x", 0.1)
    m.add("b", "x", 0.1)
    m.add("b", "x", 0.2)
    with pytest.raises(ResultsFormatError):
        m.means()
    m.add("a", "y", 0.3)
    with pytest.raises(ResultsFormatError, match="missing"):
        m.means()
