"""Command-line front end.

Every subcommand accepts ``--config FILE`` (JSON); explicit flags override
values from the file. Outputs land under ``--out-dir``::

    checkpoints/   classifier.npz, lm.json, defended.npz
    report/        *.csv, *.svg
    triggers/      *.jsonl
    manifests/     <command>.json  (config hash, seed, version)

Exit codes: 0 success, 2 configuration error, 3 missing artifact,
4 runtime failure.
"""
from __future__ import annotations

import functools
import hashlib
import json
import logging
import math
import subprocess
import sys
import zlib
from pathlib import Path

import click
import numpy as np
from click.core import ParameterSource

from . import __version__
from .attacks import METHODS, AttackConfig, AttackContext, Trigger, attacked_accuracy, run_attack
from .classifier import MeanEmbeddingClassifier, evaluate_accuracy
from .corpus import (
    Polarity,
    convert_sst_raw,
    frequency_table,
    load_splits,
    load_stopwords,
    subset_by_polarity,
    top_frequent_words,
    write_tsv,
)
from .defense import DefenseConfig, defense_loop
from .exceptions import ArtifactMissingError, ConfigError, TriggerKitError
from .langmodel import NGramLM, train_lm
from .postagger import TagLexicon, load_patterns
from .report import render_trend_plot, run_ablation_suite, write_csv
from .synthetic import make_splits

logger = logging.getLogger("sensible_triggers")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_RUNTIME = 0, 2, 3, 4
CONFIG_ALIASES = {"lambda": "perplexity_weight", "lam": "perplexity_weight", "beta_const": "objective_offset",
                  "beta": "objective_offset"}


# --- seeds, manifest, config ---------------------------------------------------

def child_seed(seed: int, name: str) -> int:
    """Independent, reproducible seed for the subsystem ``name``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode()),))
    return int(ss.generate_state(1)[0])


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def config_hash(config: dict) -> str:
    blob = json.dumps({k: _jsonable(v) for k, v in config.items()}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(out_dir: Path, command: str, config: dict, outputs) -> Path:
    seed = int(config.get("seed", 0))
    manifest = {
        "command": command,
        "version": version_string(),
        "seed": seed,
        "child_seeds": {n: child_seed(seed, n) for n in ("train", "attack", "defense")},
        "config": {k: _jsonable(v) for k, v in sorted(config.items())},
        "config_hash": config_hash(config),
        "outputs": sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
    }
    path = out_dir / "manifests" / f"{command}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _read_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _norm(key: str) -> str:
    key = key.replace("-", "_").lower()
    return CONFIG_ALIASES.get(key, key)


def _all_option_names() -> set[str]:
    names = set()
    for cmd in main.commands.values():
        names.update(p.name for p in cmd.params)
    return names


def resolve_options(ctx: click.Context, params: dict) -> dict:
    """Merge the JSON config under the explicit flags.

    Top-level keys apply to every command that knows them; a section named
    after the command (``{"attack": {...}}``) applies to that command only.
    Keys no command knows are rejected.
    """
    path = params.pop("config", None)
    if not path:
        return params
    raw = _read_config(path)
    known_everywhere = _all_option_names()
    flat = {}
    for key, value in raw.items():
        if isinstance(value, dict) and key in main.commands:
            if key == ctx.info_name:
                flat.update({_norm(k): v for k, v in value.items()})
                bad = {_norm(k) for k in value} - set(params)
                if bad:
                    raise ConfigError(f"unknown settings for {key!r} in {path}: {sorted(bad)}")
            continue
        k = _norm(key)
        if k not in known_everywhere:
            raise ConfigError(f"unknown setting {key!r} in {path}")
        flat[k] = value
    by_name = {p.name: p for p in ctx.command.params}
    out = dict(params)
    for name, value in flat.items():
        if name not in params:
            continue
        source = ctx.get_parameter_source(name)
        if source in (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT):
            continue
        try:
            out[name] = by_name[name].type_cast_value(ctx, value)
        except click.BadParameter as exc:
            raise ConfigError(f"{path}: bad value for {name!r}: {exc.message}")
    return out


def common_options(f):
    @click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON config; flags override it.")
    @click.option("--seed", type=int, default=0, show_default=True, help="Root seed for all randomness.")
    @click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("runs"),
                  show_default=True, help="Root directory for checkpoints, reports and triggers.")
    @click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("data"),
                  show_default=True, help="Directory holding train.tsv, dev.tsv, test.tsv.")
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        opts = resolve_options(ctx, kwargs)
        return f(**opts)
    return wrapper


def attack_options(f):
    for opt in reversed([
        click.option("--source", type=click.Choice(["positive", "negative"]), default="positive",
                     show_default=True, help="Polarity whose predictions the trigger should flip."),
        click.option("--trigger-len", type=int, default=3, show_default=True),
        click.option("--num-candidates", type=int, default=100, show_default=True),
        click.option("--beam-size", type=int, default=5, show_default=True),
        click.option("--perplexity-weight", type=float, default=-0.00005, show_default=True,
                     help="Weight on trigger perplexity in the objective (negative favours fluent triggers)."),
        click.option("--objective-offset", type=float, default=5.0, show_default=True,
                     help="Constant added to the objective; never changes the chosen trigger."),
        click.option("--perplexity-scale", type=str, default="1.0", show_default=True,
                     help="Positive number, or 'auto' to calibrate on random candidates."),
        click.option("--placement", type=click.Choice(["prepend", "append"]), default="prepend", show_default=True),
        click.option("--max-rounds", type=int, default=10, show_default=True),
        click.option("--grad-batch-size", type=int, default=256, show_default=True,
                     help="Source examples used for gradients and scoring."),
        click.option("--nn-step", type=float, default=1.0, show_default=True),
        click.option("--patterns", "patterns_path", type=click.Path(dir_okay=False), default=None,
                     help="POS pattern file (default: the shipped set)."),
        click.option("--lexicon", "lexicon_path", type=click.Path(dir_okay=False), default=None,
                     help="Tag lexicon TSV (default: the shipped lexicon)."),
        click.option("--model", "model_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="Classifier checkpoint (default: OUT_DIR/checkpoints/classifier.npz)."),
        click.option("--lm", "lm_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="Language model (default: OUT_DIR/checkpoints/lm.json)."),
        click.option("--split", type=click.Choice(["train", "dev", "test"]), default="dev", show_default=True),
    ]):
        f = opt(f)
    return f


def _scale(value: str):
    if str(value).lower() == "auto":
        return "auto"
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"perplexity-scale must be a number or 'auto', got {value!r}")
    if v <= 0:
        raise ConfigError("perplexity-scale must be positive")
    return v


def build_attack_config(opts: dict, seed: int, patterns=None) -> AttackConfig:
    try:
        return AttackConfig(
            trigger_len=opts["trigger_len"], num_candidates=opts["num_candidates"], beam_size=opts["beam_size"],
            perplexity_weight=opts["perplexity_weight"], objective_offset=opts["objective_offset"],
            perplexity_scale=_scale(opts["perplexity_scale"]), patterns=patterns, placement=opts["placement"],
            max_rounds=opts["max_rounds"], seed=seed, batch_size=opts["grad_batch_size"], nn_step=opts["nn_step"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


# --- artifact helpers ------------------------------------------------------------

def _require(path: Path, what: str, hint: str) -> Path:
    if not Path(path).exists():
        raise ArtifactMissingError(f"{what} not found at {path}; {hint}")
    return Path(path)


def _splits(data_dir: Path, names=("train", "dev", "test")):
    for n in names:
        _require(data_dir / f"{n}.tsv", f"{n} split", "run `sensible-triggers prepare-sst` or `sensible-triggers synth`")
    return load_splits(data_dir, names)


def _model(opts) -> MeanEmbeddingClassifier:
    path = opts.get("model_path") or opts["out_dir"] / "checkpoints" / "classifier.npz"
    _require(path, "classifier checkpoint", "run `sensible-triggers train` first")
    return MeanEmbeddingClassifier.load(path)


def _lm(opts) -> NGramLM:
    path = opts.get("lm_path") or opts["out_dir"] / "checkpoints" / "lm.json"
    _require(path, "language model", "run `sensible-triggers lm-train` first")
    return NGramLM.load(path)


def _lm_exists(opts) -> bool:
    return Path(opts.get("lm_path") or opts["out_dir"] / "checkpoints" / "lm.json").exists()


def _lexicon(opts) -> TagLexicon:
    p = opts.get("lexicon_path")
    return TagLexicon.load(_require(p, "tag lexicon", "check --lexicon") if p else None)


def _patterns(opts):
    p = opts.get("patterns_path")
    return load_patterns(_require(p, "pattern file", "check --patterns") if p else None)


def _dirs(out_dir: Path):
    for sub in ("checkpoints", "report", "triggers"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    return out_dir / "checkpoints", out_dir / "report", out_dir / "triggers"


def write_jsonl(path: Path, triggers) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triggers:
            rec = {k: _jsonable(v) for k, v in t.to_record().items()}
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{path}:{lineno}: invalid JSON ({exc.msg})")
    return rows


# --- commands ----------------------------------------------------------------------

@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
@click.version_option(__version__, prog_name="sensible-triggers")
def main(verbose):
    """Universal adversarial triggers, sensible triggers and adversarial
    fine-tuning for a mean-of-embeddings sentiment classifier."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("synth")
@common_options
@click.option("--n-train", type=int, default=2000, show_default=True)
@click.option("--n-dev", type=int, default=400, show_default=True)
@click.option("--n-test", type=int, default=400, show_default=True)
def synth_cmd(seed, out_dir, data_dir, n_train, n_dev, n_test):
    """Write a synthetic SST-format corpus to DATA_DIR (for smoke runs)."""
    data_dir.mkdir(parents=True, exist_ok=True)
    splits = make_splits(n_train, n_dev, n_test, seed=seed)
    for name, split in splits.items():
        write_tsv(split, data_dir / f"{name}.tsv")
    click.echo(" ".join(f"{n}={len(s)}" for n, s in splits.items()))


@main.command("prepare-sst")
@common_options
@click.argument("raw_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
def prepare_sst_cmd(seed, out_dir, data_dir, raw_dir):
    """Convert the raw Stanford Sentiment Treebank release into DATA_DIR/*.tsv."""
    counts = convert_sst_raw(raw_dir, data_dir)
    click.echo(" ".join(f"{n}={c}" for n, c in counts.items()))


@main.command("train")
@common_options
@click.option("--embedding-dim", type=int, default=32, show_default=True)
@click.option("--hidden-dim", type=int, default=32, show_default=True)
@click.option("--learning-rate", type=float, default=0.005, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--l2", type=float, default=0.0, show_default=True)
@click.option("--optimizer", type=click.Choice(["adam", "sgd"]), default="adam", show_default=True)
@click.option("--min-freq", type=int, default=1, show_default=True)
def train_cmd(**opts):
    """Train the sentiment classifier on the binarized train split."""
    out_dir = opts["out_dir"]
    splits = _splits(opts["data_dir"])
    ckpt, report, _ = _dirs(out_dir)
    train = splits["train"].binary()
    try:
        clf = MeanEmbeddingClassifier(
            embedding_dim=opts["embedding_dim"], hidden_dim=opts["hidden_dim"],
            learning_rate=opts["learning_rate"], epochs=opts["epochs"], batch_size=opts["batch_size"],
            l2=opts["l2"], optimizer=opts["optimizer"], min_freq=opts["min_freq"],
            random_state=child_seed(opts["seed"], "train"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    clf.fit(train.tokens, train.polarities)
    model_path = ckpt / "classifier.npz"
    clf.save(model_path, seed=opts["seed"])
    hist_path = report / "train_history.csv"
    write_csv(hist_path, ("epoch", "loss"), [(i + 1, v) for i, v in enumerate(clf.loss_history_)])
    rows = _accuracy_rows(clf, splits)
    eval_path = report / "train_eval.csv"
    write_csv(eval_path, ("split", "subset", "trigger", "n", "accuracy"), rows)
    stop = load_stopwords()
    freq_paths = []
    for pol in (Polarity.POSITIVE, Polarity.NEGATIVE):
        p = report / f"top_words_{pol.name.lower()}.csv"
        write_csv(p, ("token", "count"), frequency_table(splits["train"], pol, stop)[:100])
        freq_paths.append(p)
    write_manifest(out_dir, "train", opts, [model_path, hist_path, eval_path, *freq_paths])
    for r in rows:
        click.echo(f"{r[0]:5s} {r[1]:8s} n={r[3]:5d} accuracy={r[4]:.4f}")


def _accuracy_rows(clf, splits, trigger: Trigger | None = None, names=("dev", "test")):
    rows = []
    ids = trigger.ids if trigger is not None else None
    text = trigger.text if trigger is not None else ""
    for name in names:
        split = splits[name].binary()
        for pol in (Polarity.POSITIVE, Polarity.NEGATIVE):
            sub = subset_by_polarity(split, pol)
            if len(sub):
                rows.append((name, pol.name.lower(), text, len(sub),
                             evaluate_accuracy(clf.params_, sub, clf.vocab_, ids)))
        if trigger is None:
            rows.append((name, "all", "", len(split), clf.score(split.tokens, split.polarities)))
    return rows


@main.command("lm-train")
@common_options
@click.option("--order", type=click.IntRange(1, 3), default=3, show_default=True)
@click.option("--k", "k", type=float, default=0.1, show_default=True, help="Additive smoothing constant.")
def lm_train_cmd(**opts):
    """Fit the n-gram language model on the train split (all polarities)."""
    out_dir = opts["out_dir"]
    splits = _splits(opts["data_dir"], ("train", "dev"))
    ckpt, report, _ = _dirs(out_dir)
    try:
        lm = train_lm([splits["train"]], order=opts["order"], k=opts["k"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    path = ckpt / "lm.json"
    lm.save(path)
    dev_docs = splits["dev"].tokens
    n_tokens = sum(len(d) + 1 for d in dev_docs)
    ppl = math.exp(-lm.score(dev_docs) / n_tokens)
    rep = report / "lm_eval.csv"
    write_csv(rep, ("split", "order", "k", "events", "perplexity"), [("dev", opts["order"], opts["k"], lm.n_events, ppl)])
    write_manifest(out_dir, "lm-train", opts, [path, rep])
    click.echo(f"dev perplexity {ppl:.3f} over {n_tokens} events")


@main.command("attack")
@common_options
@click.option("--method", type=click.Choice(METHODS), default="uat", show_default=True)
@click.option("--tokens", default=None, help="Space-separated trigger for --method hardcoded.")
@attack_options
def attack_cmd(**opts):
    """Search for (or evaluate) a universal trigger against the classifier."""
    out_dir = opts["out_dir"]
    method = opts["method"]
    source = Polarity.parse(opts["source"])
    splits = _splits(opts["data_dir"], ("train", opts["split"]))
    clf = _model(opts)
    _, report, trig_dir = _dirs(out_dir)
    patterns = _patterns(opts) if method == "sensible" else None
    cfg = build_attack_config(opts, child_seed(opts["seed"], "attack"), patterns)
    # the LM steers only the sensible search; otherwise it is used, if present, to report perplexity
    lm = _lm(opts) if method == "sensible" or _lm_exists(opts) else None
    lexicon = _lexicon(opts) if method == "sensible" else None
    tokens = None
    if method == "hardcoded":
        if not opts["tokens"]:
            raise ConfigError("--method hardcoded needs --tokens")
        tokens = opts["tokens"].lower().split()
    elif method == "topfreq":
        tokens = top_frequent_words(splits["train"], source.opposite, cfg.trigger_len, load_stopwords())
    subset = subset_by_polarity(splits[opts["split"]].binary(), source)
    ctx = AttackContext(clf.params_, clf.vocab_, list(subset), source, batch_size=cfg.batch_size,
                        seed=cfg.seed, placement=cfg.placement)
    trig = run_attack(method, ctx, cfg, lm=lm if method == "sensible" else None, lexicon=lexicon, tokens=tokens)
    trig.attacked_accuracy = attacked_accuracy(ctx, trig, subset)
    clean = evaluate_accuracy(clf.params_, subset, clf.vocab_)
    ppl = lm.perplexity(trig.tokens) if lm is not None else float("nan")
    stem = f"{method}_{source.name.lower()}"
    jsonl = trig_dir / f"{stem}.jsonl"
    write_jsonl(jsonl, [trig])
    csv_path = report / f"attack_{stem}.csv"
    write_csv(csv_path, ("method", "source", "target", "split", "trigger", "clean_accuracy", "attacked_accuracy",
                         "objective", "trigger_perplexity", "fallback"),
              [(method, source.name.lower(), trig.target.name.lower(), opts["split"], trig.text, clean,
                trig.attacked_accuracy, trig.objective, ppl, trig.fallback)])
    write_manifest(out_dir, f"attack-{stem}", opts, [jsonl, csv_path])
    click.echo(f"{method}: '{trig.text}' accuracy {clean:.4f} -> {trig.attacked_accuracy:.4f}"
               + (" (fallback: no pattern-satisfying trigger)" if trig.fallback else ""))


@main.command("defend")
@common_options
@click.option("--alpha", type=click.IntRange(0, 1), default=0, show_default=True,
              help="1 to keep the clean training set alongside the augmented copy.")
@click.option("--beta-frac", type=click.FloatRange(0, 1), default=1.0, show_default=True,
              help="Fraction of training examples that get a pool trigger.")
@click.option("--epochs-per-iter", type=int, default=1, show_default=True)
@click.option("--iterations", type=int, default=20, show_default=True)
@click.option("--attack-method", type=click.Choice(["uat", "sensible"]), default="uat", show_default=True)
@click.option("--learning-rate", type=float, default=0.005, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--heldout-trigger", default=None, help="Fixed trigger also evaluated each iteration.")
@attack_options
def defend_cmd(**opts):
    """Adversarially fine-tune the classifier and record robustness per iteration."""
    out_dir = opts["out_dir"]
    source = Polarity.parse(opts["source"])
    splits = _splits(opts["data_dir"], ("train", opts["split"]))
    clf = _model(opts)
    ckpt, report, trig_dir = _dirs(out_dir)
    sensible = opts["attack_method"] == "sensible"
    patterns = _patterns(opts) if sensible else None
    acfg = build_attack_config(opts, child_seed(opts["seed"], "attack"), patterns)
    lm = _lm(opts) if sensible else None
    lexicon = _lexicon(opts) if sensible else None
    try:
        dcfg = DefenseConfig(
            alpha=opts["alpha"], beta_frac=opts["beta_frac"], epochs_per_iter=opts["epochs_per_iter"],
            iterations=opts["iterations"], seed=child_seed(opts["seed"], "defense"), attack_cfg=acfg,
            flip_direction=(source, source.opposite), attack_method=opts["attack_method"],
            learning_rate=opts["learning_rate"], batch_size=opts["batch_size"],
            heldout_trigger=opts["heldout_trigger"].lower().split() if opts["heldout_trigger"] else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    params, history = defense_loop(clf.params_, clf.vocab_, splits["train"], splits[opts["split"]], dcfg,
                                   lm=lm, lexicon=lexicon)
    model_path = ckpt / "defended.npz"
    MeanEmbeddingClassifier.from_params(params, clf.vocab_).save(model_path, seed=opts["seed"])
    hist_path = report / "defense_history.csv"
    history.to_csv(hist_path)
    summary_path = report / "defense_summary.csv"
    rows = [
        ("baseline_orig_dev", history.baseline_orig_dev),
        ("baseline_attacked_dev", history.baseline_attacked_dev),
        ("final_orig_dev", history.final_orig_dev),
        ("final_attacked_dev", history.records[-1].acc_attacked_dev),
        ("attacked_slope", history.attacked_slope()),
        ("pool_size", len(history.pool)),
    ]
    write_csv(summary_path, ("metric", "value"), rows)
    pool_path = trig_dir / "defense_pool.jsonl"
    write_jsonl(pool_path, history.pool)
    outputs = [model_path, hist_path, summary_path, pool_path]
    if len(history) >= 2:
        svg = report / "defense_trend.svg"
        render_trend_plot(history, svg)
        outputs.append(svg)
    write_manifest(out_dir, "defend", opts, outputs)
    for name, value in rows:
        click.echo(f"{name:22s} {value:.4f}" if isinstance(value, float) else f"{name:22s} {value}")


@main.command("eval")
@common_options
@click.option("--model", "model_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--trigger", default=None, help="Space-separated trigger to attach.")
@click.option("--triggers", "triggers_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="JSONL file of triggers; each is evaluated on its source subset.")
@click.option("--placement", type=click.Choice(["prepend", "append"]), default="prepend", show_default=True)
@click.option("--split", type=click.Choice(["train", "dev", "test"]), default="dev", show_default=True)
@click.option("--tag", "run_tag", default="eval", show_default=True, help="Report name: report/<tag>.csv.")
def eval_cmd(**opts):
    """Per-polarity accuracy, with or without triggers attached."""
    out_dir = opts["out_dir"]
    split_name = opts["split"]
    splits = _splits(opts["data_dir"], (split_name,))
    clf = _model(opts)
    _, report, _ = _dirs(out_dir)
    split = splits[split_name].binary()
    rows = []
    for pol in (Polarity.POSITIVE, Polarity.NEGATIVE):
        sub = subset_by_polarity(split, pol)
        rows.append((split_name, pol.name.lower(), "", len(sub), evaluate_accuracy(clf.params_, sub, clf.vocab_)))
    trigs = []
    if opts["trigger"]:
        trigs += [(None, opts["trigger"].lower().split())]
    if opts["triggers_path"]:
        _require(opts["triggers_path"], "trigger file", "run `sensible-triggers attack` first")
        for rec in read_jsonl(opts["triggers_path"]):
            trigs.append((Polarity.parse(rec["target"]).opposite, rec["tokens"]))
    for src, tokens in trigs:
        ids = [clf.vocab_.id(t) for t in tokens]
        for pol in ([src] if src is not None else [Polarity.POSITIVE, Polarity.NEGATIVE]):
            sub = subset_by_polarity(split, pol)
            rows.append((split_name, pol.name.lower(), " ".join(tokens), len(sub),
                         evaluate_accuracy(clf.params_, sub, clf.vocab_, ids, opts["placement"])))
    path = report / f"{opts['run_tag']}.csv"
    write_csv(path, ("split", "subset", "trigger", "n", "accuracy"), rows)
    write_manifest(out_dir, opts["run_tag"], opts, [path])
    for r in rows:
        click.echo(f"{r[1]:8s} {r[2] or '(none)':40s} n={r[3]:5d} accuracy={r[4]:.4f}")


@main.command("ablate")
@common_options
@click.option("--seeds", default="0,1,2", show_default=True, help="Comma-separated attack seeds.")
@attack_options
def ablate_cmd(**opts):
    """Run the {random, UAT} x POS x perplexity x beam grid."""
    out_dir = opts["out_dir"]
    source = Polarity.parse(opts["source"])
    try:
        seeds = [int(s) for s in str(opts["seeds"]).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds must be comma-separated integers, got {opts['seeds']!r}")
    if not seeds:
        raise ConfigError("--seeds is empty")
    splits = _splits(opts["data_dir"], (opts["split"],))
    clf = _model(opts)
    lm = _lm(opts)
    lexicon = _lexicon(opts)
    patterns = _patterns(opts)
    _, report, trig_dir = _dirs(out_dir)
    base = build_attack_config(opts, 0, None)
    subset = subset_by_polarity(splits[opts["split"]].binary(), source)
    attack_root = child_seed(opts["seed"], "attack")
    _, summary, triggers = run_ablation_suite(clf.params_, clf.vocab_, subset, lm, lexicon, base,
                                              [attack_root + s for s in seeds], report, patterns=patterns)
    jsonl = trig_dir / "ablation.jsonl"
    write_jsonl(jsonl, triggers)
    write_manifest(out_dir, "ablate", opts, [report / "ablation_runs.csv", report / "ablation_summary.csv", jsonl])
    for row in summary:
        flags = "".join(c for c, on in zip("PLB", row[1:4]) if on) or "-"
        click.echo(f"{row[0]:6s} {flags:3s} mean={row[6]:.4f} min={row[7]:.4f}  e.g. '{row[5]}'")


@main.command("plot")
@common_options
@click.option("--history", "history_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Defense history CSV (default: OUT_DIR/report/defense_history.csv).")
@click.option("--output", "output_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="SVG path (default: OUT_DIR/report/defense_trend.svg).")
def plot_cmd(**opts):
    """Render the defense history as an SVG trend plot."""
    out_dir = opts["out_dir"]
    hist = opts["history_path"] or out_dir / "report" / "defense_history.csv"
    _require(hist, "defense history", "run `sensible-triggers defend` first")
    out = opts["output_path"] or out_dir / "report" / "defense_trend.svg"
    out.parent.mkdir(parents=True, exist_ok=True)
    render_trend_plot(hist, out)
    write_manifest(out_dir, "plot", opts, [out] if out.resolve().is_relative_to(out_dir.resolve()) else [])
    click.echo(str(out))


def run(argv=None) -> int:
    """Invoke the CLI and map failures onto exit codes."""
    try:
        main.main(args=argv, prog_name="sensible-triggers", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_RUNTIME
    except click.UsageError as exc:
        exc.show()
        return EXIT_CONFIG
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except (ArtifactMissingError, FileNotFoundError) as exc:
        click.echo(f"missing artifact: {exc}", err=True)
        return EXIT_MISSING
    except (TriggerKitError, ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        logger.debug("command failed", exc_info=True)
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


def entry() -> None:
    sys.exit(run())
