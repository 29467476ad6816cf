"""Ablation grid over the trigger-search components and the SVG trend plot
for adversarial fine-tuning histories."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .attacks import (
    AttackConfig,
    AttackContext,
    Trigger,
    generate_trigger_sensible,
    generate_trigger_uat,
    random_attack,
)
from .classifier import evaluate_accuracy
from .defense import DefenseHistory
from .postagger import load_patterns, matches_any, tag

RUN_COLUMNS = ("method", "pos", "perplexity", "beam", "seed", "trigger", "attacked_accuracy",
               "objective", "trigger_perplexity", "pattern_ok", "fallback")
SUMMARY_COLUMNS = ("method", "pos", "perplexity", "beam", "n_seeds", "sample_trigger",
                   "mean_attacked_accuracy", "min_attacked_accuracy", "mean_trigger_perplexity")


@dataclass(frozen=True)
class AblationCell:
    method: str  # "random" or "uat"
    pos: bool
    perplexity: bool
    beam: bool

    @property
    def label(self) -> str:
        parts = ["Random" if self.method == "random" else "UAT"]
        parts += [name for name, on in (("POS", self.pos), ("Perplexity", self.perplexity), ("Beam", self.beam)) if on]
        return " + ".join(parts)

    def config(self, base: AttackConfig, patterns, seed: int) -> AttackConfig:
        return base.replace(
            seed=seed,
            patterns=patterns if self.pos else None,
            perplexity_weight=base.perplexity_weight if self.perplexity else 0.0,
            beam_size=base.beam_size if self.beam else 1,
            candidate_source="random" if self.method == "random" else "hotflip",
        )


def ablation_grid(methods: Sequence[str] = ("random", "uat")) -> list[AblationCell]:
    return [AblationCell(m, pos, ppl, beam)
            for m in methods for pos, ppl, beam in itertools.product((False, True), repeat=3)]


def run_cell(cell: AblationCell, ctx: AttackContext, base: AttackConfig, lm, lexicon, patterns, seed: int) -> Trigger:
    """Plain cells reduce to the baselines; anything else runs the beam search
    (beam width 1 when the beam flag is off)."""
    cfg = cell.config(base, patterns, seed)
    if not (cell.pos or cell.perplexity or cell.beam):
        return random_attack(ctx, cfg) if cell.method == "random" else generate_trigger_uat(ctx, cfg)
    return generate_trigger_sensible(ctx, lm if cell.perplexity else None, lexicon, cfg)


def run_ablation_suite(params, vocab, subset, lm, lexicon, base: AttackConfig, seeds: Iterable[int],
                       out_dir, patterns=None, cells: Sequence[AblationCell] | None = None):
    """Run every grid cell for every seed; write per-run and per-cell CSVs.

    Returns ``(run_rows, summary_rows, triggers)``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    patterns = tuple(patterns) if patterns is not None else load_patterns()
    cells = list(cells) if cells is not None else ablation_grid()
    seeds = [int(s) for s in seeds]
    examples = list(subset)
    source = examples[0].polarity
    runs, triggers = [], []
    for cell in cells:
        for seed in seeds:
            ctx = AttackContext(params, vocab, examples, source, batch_size=base.batch_size, seed=seed,
                                placement=base.placement)
            trig = run_cell(cell, ctx, base, lm, lexicon, patterns, seed)
            trig.method = cell.label
            trig.attacked_accuracy = evaluate_accuracy(params, subset, vocab, trig.ids, base.placement)
            triggers.append(trig)
            ppl = lm.perplexity(trig.tokens) if lm is not None else float("nan")
            ok = matches_any(tag(lexicon, trig.tokens), patterns) if len(trig) == len(patterns[0]) else False
            runs.append([cell.method, cell.pos, cell.perplexity, cell.beam, seed, trig.text,
                         trig.attacked_accuracy, trig.objective, ppl, ok, trig.fallback])
    summary = []
    for i, cell in enumerate(cells):
        block = runs[i * len(seeds):(i + 1) * len(seeds)]
        accs = [r[6] for r in block]
        ppls = [r[8] for r in block]
        summary.append([cell.method, cell.pos, cell.perplexity, cell.beam, len(seeds), block[0][5],
                        float(np.mean(accs)), float(np.min(accs)), float(np.mean(ppls))])
    write_csv(out_dir / "ablation_runs.csv", RUN_COLUMNS, runs)
    write_csv(out_dir / "ablation_summary.csv", SUMMARY_COLUMNS, summary)
    return runs, summary, triggers


def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return v


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


# --- trend plot ----------------------------------------------------------------

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 40, 50
SERIES = (("acc_orig_dev", "original dev", "#1f77b4"), ("acc_attacked_dev", "attacked dev", "#d62728"))


def label_stride(n: int) -> int:
    """Iterations between x-axis labels: 1 up to 10 points, then powers of ten."""
    if n <= 10:
        return 1
    return 10 ** (math.ceil(math.log10(n)) - 1)


def render_trend_plot(history, out_path=None, title="Accuracy over defense iterations") -> str:
    """SVG line plot of original and attacked dev accuracy against iteration.

    ``history`` is a :class:`DefenseHistory` or a path to its CSV. Output is a
    pure function of the input (fixed-precision coordinates, no timestamps).
    """
    if not isinstance(history, DefenseHistory):
        history = DefenseHistory.read_csv(history)
    if len(history) < 2:
        raise ValueError("a trend plot needs at least two iterations")
    x = history.column("iteration")
    lo, hi = float(x.min()), float(x.max())
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - lo) / (hi - lo) * pw

    def sy(v):
        return TOP + (1.0 - v) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    stride = label_stride(len(x))
    out.append('<g class="xticks">')
    for v in x:
        px = sx(v)
        out.append(f'<line x1="{px:.2f}" y1="{TOP + ph}" x2="{px:.2f}" y2="{TOP + ph + 4}" stroke="black"/>')
    out.append("</g>")
    out.append('<g class="xlabels" font-family="sans-serif" font-size="11" text-anchor="middle">')
    for v in x:
        if int(v) % stride == 0 or v == lo:
            out.append(f'<text x="{sx(v):.2f}" y="{TOP + ph + 17}">{int(v)}</text>')
    out.append("</g>")
    out.append('<g class="yticks" font-family="sans-serif" font-size="11" text-anchor="end">')
    for i in range(6):
        v = i / 5
        out.append(f'<line x1="{LEFT - 4}" y1="{sy(v):.2f}" x2="{LEFT}" y2="{sy(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 7}" y="{sy(v) + 4:.2f}">{v:.1f}</text>')
    out.append("</g>")
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">iteration</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 16 {TOP + ph / 2:.2f})">accuracy</text>')
    for i, (col, name, color) in enumerate(SERIES):
        y = history.column(col)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if not math.isnan(b))
        out.append(f'<polyline class="series" data-name="{name}" fill="none" stroke="{color}" '
                   f'stroke-width="2" points="{pts}"/>')
        ly = TOP + 12 + 16 * i
        out.append(f'<line x1="{LEFT + pw - 130}" y1="{ly}" x2="{LEFT + pw - 110}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 104}" y="{ly + 4}" font-family="sans-serif" font-size="12">{name}</text>')
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if out_path is not None:
        Path(out_path).write_text(svg, encoding="utf-8")
    return svg
