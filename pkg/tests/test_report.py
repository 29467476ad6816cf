import csv
import re
from pathlib import Path

import pytest

from sensible_triggers.attacks import AttackConfig
from sensible_triggers.corpus import Polarity, subset_by_polarity
from sensible_triggers.defense import DefenseHistory, DefenseRecord
from sensible_triggers.postagger import load_patterns, matches_any, tag
from sensible_triggers.report import (
    AblationCell,
    ablation_grid,
    label_stride,
    render_trend_plot,
    run_ablation_suite,
)

GOLDEN = Path(__file__).parent / "golden"


def history_of(ys, orig=0.8):
    h = DefenseHistory()
    for i, y in enumerate(ys, start=1):
        h.records.append(DefenseRecord(i, f"t{i}", orig, y, 0.1, orig, y, float("nan"), i))
    return h


def polylines(svg):
    return re.findall(r'<polyline class="series" data-name="([^"]+)"[^>]*points="([^"]*)"', svg)


class TestGrid:
    def test_sixteen_cells(self):
        grid = ablation_grid()
        assert len(grid) == 16 and len(set(grid)) == 16
        labels = {c.label for c in grid}
        assert "UAT + POS + Perplexity + Beam" in labels and "Random" in labels and "UAT" in labels

    def test_cell_config(self):
        base = AttackConfig(beam_size=5, perplexity_weight=-0.1)
        pats = load_patterns()
        cfg = AblationCell("random", pos=True, perplexity=False, beam=False).config(base, pats, seed=4)
        assert (cfg.patterns, cfg.perplexity_weight, cfg.beam_size, cfg.candidate_source, cfg.seed) == \
            (pats, 0.0, 1, "random", 4)

    def test_suite_outputs(self, toy_model, toy_split, toy_lm, lexicon, tmp_path):
        pos = subset_by_polarity(toy_split, Polarity.POSITIVE)
        base = AttackConfig(num_candidates=26, perplexity_scale="auto", perplexity_weight=-1.0)
        runs, summary, trigs = run_ablation_suite(toy_model.params_, toy_model.vocab_, pos, toy_lm, lexicon,
                                                  base, seeds=[0, 1], out_dir=tmp_path)
        assert len(runs) == 32 and len(summary) == 16
        with open(tmp_path / "ablation_summary.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 16
        with open(tmp_path / "ablation_runs.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 32
        full = [t for t in trigs if t.method == "UAT + POS + Perplexity + Beam"]
        assert full and all(matches_any(tag(lexicon, t.tokens), load_patterns()) for t in full)
        again = tmp_path / "again"
        run_ablation_suite(toy_model.params_, toy_model.vocab_, pos, toy_lm, lexicon, base, seeds=[0, 1],
                           out_dir=again)
        assert (again / "ablation_runs.csv").read_bytes() == (tmp_path / "ablation_runs.csv").read_bytes()


class TestTrendPlot:
    def test_golden(self):
        svg = render_trend_plot(GOLDEN / "history.csv")
        assert svg.encode() == (GOLDEN / "trend.svg").read_bytes()

    def test_hand_coordinates(self):
        svg = render_trend_plot(GOLDEN / "history.csv")
        series = dict(polylines(svg))
        # iteration 1 sits on the left axis; y = top + (1 - acc) * plot height
        first = series["original dev"].split()[0]
        assert first == f"60.00,{40 + (1 - 0.835) * 310:.2f}"
        assert series["attacked dev"].split()[-1] == f"620.00,{40 + (1 - 0.63) * 310:.2f}"

    def test_hundred_iterations(self):
        svg = render_trend_plot(history_of([i / 100 for i in range(100)]))
        ticks = re.search(r'<g class="xticks">(.*?)</g>', svg, re.S).group(1)
        assert ticks.count("<line") == 100
        labels = re.findall(r'<text x="[^"]+" y="367">(\d+)</text>', svg)
        assert labels == ["1"] + [str(i) for i in range(10, 101, 10)]
        assert all(len(p.split()) == 100 for _, p in polylines(svg))

    def test_constant_history(self):
        svg = render_trend_plot(history_of([0.5] * 5))
        ys = {pt.split(",")[1] for pt in dict(polylines(svg))["attacked dev"].split()}
        assert ys == {f"{40 + 0.5 * 310:.2f}"}

    def test_too_short(self):
        with pytest.raises(ValueError):
            render_trend_plot(history_of([0.5]))

    def test_label_stride(self):
        assert [label_stride(n) for n in (2, 10, 11, 100, 101)] == [1, 1, 10, 10, 100]

    def test_writes_file(self, tmp_path):
        out = tmp_path / "p.svg"
        svg = render_trend_plot(history_of([0.1, 0.2]), out)
        assert out.read_text() == svg


def test_plain_uat_cell_is_baseline(toy_model, toy_split, toy_lm, lexicon):
    from sensible_triggers.attacks import AttackContext, generate_trigger_uat
    from sensible_triggers.report import run_cell
    pos = list(subset_by_polarity(toy_split, Polarity.POSITIVE))
    ctx = AttackContext(toy_model.params_, toy_model.vocab_, pos, Polarity.POSITIVE)
    base = AttackConfig(perplexity_weight=0.0)
    cell = AblationCell("uat", pos=False, perplexity=False, beam=False)
    assert run_cell(cell, ctx, base, toy_lm, lexicon, load_patterns(), seed=0).ids == \
        generate_trigger_uat(ctx, base).ids
