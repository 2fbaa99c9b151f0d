import pytest

from marsupial.errors import ElementLengthUnsupported, InvalidParams
from marsupial.studies import (
    RtfReport,
    RtfRun,
    bench_rtf,
    catenary_cell,
    catenary_study,
    hover_world,
    study_anchors,
    study_table,
)


def test_study_anchors_geometry():
    root, tip = study_anchors(10.0)
    assert root.tolist() == [0.0, 0.0, 0.5]
    assert tip[2] - root[2] == pytest.approx(5.0)


def test_rejects_long_elements():
    with pytest.raises(ElementLengthUnsupported):
        catenary_cell(5.0, 0.25)
    with pytest.raises(ElementLengthUnsupported):
        catenary_study([5.0], [0.1, 0.25])


def test_single_cell_accuracy():
    cell = catenary_cell(10.0, 0.10)
    assert cell.error_pct < 1.5 and cell.nodes == 121 and cell.max_stretch < 1e-3


def test_table_dimensions():
    cells = catenary_study([5.0, 6.0], [0.2, 0.15, 0.1], duration=0.5)
    header, rows = study_table(cells)
    assert header == ["element_length", "err_5", "err_6", "mean"]
    assert [r[0] for r in rows] == [0.1, 0.15, 0.2]
    assert all(len(r) == 4 for r in rows)
    assert rows[0][3] == pytest.approx((rows[0][1] + rows[0][2]) / 2)


def test_hover_world_element_count():
    w = hover_world(40)
    assert w.tether.n_segments == 40 and w.tracker is not None


@pytest.mark.parametrize("kwargs", [{"element_counts": [100]}, {"sim_seconds": 0.0},
                                    {"element_counts": [0, 10]}, {"repetitions": 0}])
def test_bench_preconditions(kwargs):
    with pytest.raises(InvalidParams):
        bench_rtf(**kwargs)


def test_bench_report_shape():
    report = bench_rtf([5, 20], sim_seconds=0.02, repetitions=1)
    assert [r.element_count for r in report.runs] == [5, 20]
    assert all(r.rtf > 0 and r.sim_seconds == pytest.approx(0.02) for r in report.runs)
    assert "python=" in report.machine
    assert set(report.rtf_by_count()) == {5, 20}


def test_report_by_count():
    r = RtfReport([RtfRun(1, 1.0, 2.0, 0.5)], machine="m")
    assert r.rtf_by_count() == {1: 0.5}
