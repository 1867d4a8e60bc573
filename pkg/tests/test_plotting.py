import xml.etree.ElementTree as ET

import numpy as np
import pytest

from chanembed.plotting import class_colors, scatter_svg, surface_svg

SVG = "{http://www.w3.org/2000/svg}"


def groups(path):
    root = ET.parse(path).getroot()
    return {g.get("id"): g for g in root.iter(SVG + "g") if g.get("id")}


def three_classes():
    rng = np.random.default_rng(0)
    y = np.vstack([rng.normal(size=(10, 2)) + c for c in ((0, 0), (5, 0), (0, 5))])
    labels = ["anechoic"] * 10 + ["indoor"] * 10 + ["reverberant"] * 10
    return y, labels


def test_scatter_has_one_legend_entry_per_class(tmp_path):
    y, labels = three_classes()
    scatter_svg(tmp_path / "s.svg", y, labels, title="t")
    g = groups(tmp_path / "s.svg")
    assert "legend" in g
    entries = [k for k in g if k.startswith("legend-")]
    assert sorted(entries) == ["legend-anechoic", "legend-indoor", "legend-reverberant"]
    for name in ("anechoic", "indoor", "reverberant"):
        assert len(list(g[f"class-{name}"].iter(SVG + "use"))) == 10


def test_scatter_bytes_are_deterministic(tmp_path):
    y, labels = three_classes()
    scatter_svg(tmp_path / "a.svg", y, labels, title="t")
    scatter_svg(tmp_path / "b.svg", y, labels, title="t")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_empty_embedding_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        scatter_svg(tmp_path / "e.svg", np.zeros((0, 2)), [])


def test_class_colors_follow_sorted_names():
    c = class_colors(["b", "a", "c", "a"])
    assert list(c) == ["a", "b", "c"]
    assert len(set(c.values())) == 3


def test_surface_marks_argmax(tmp_path):
    S = np.array([[1.0, 2.0], [np.nan, 0.5]])
    surface_svg(tmp_path / "h.svg", [1.0, 10.0], [5.0, 50.0], S, best=(0, 1), title="F")
    assert "argmax" in groups(tmp_path / "h.svg")
