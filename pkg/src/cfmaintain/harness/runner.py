"""The streaming protocol: initial training and CFEs, interleaved learning and
maintenance, periodic checkpoints, and final regeneration baselines."""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core import CfeState, LabeledBuffer, make_rng, repeat_seeds
from ..generators import GenerationError, NoPrototypeWarning, make_generator
from ..maintenance import MaintenanceConfig, check_retire, maintain_population
from ..metrics import CheckpointReport, checkpoint_evaluate
from ..models import make_model
from ..streams import DriftingStream
from .config import REGEN_METHODS, ExperimentConfig

logger = logging.getLogger(__name__)

TARGET = 1
_GENERATOR_FOR = {"nn": "nn", "gs": "gs", "robx-regen": "robx"}


class RepeatAborted(RuntimeError):
    """More than half of the initial counterfactuals could not be generated."""


@dataclass
class RunArtifacts:
    checkpoints: List[dict] = field(default_factory=list)
    final: List[dict] = field(default_factory=list)
    runtime: List[dict] = field(default_factory=list)
    timing: List[dict] = field(default_factory=list)
    ablation: List[dict] = field(default_factory=list)
    seeds: List[dict] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)
    configs: List[ExperimentConfig] = field(default_factory=list)

    def extend(self, other: "RunArtifacts") -> "RunArtifacts":
        for name in ("checkpoints", "final", "runtime", "timing", "ablation", "seeds",
                     "diagnostics", "configs"):
            getattr(self, name).extend(getattr(other, name))
        return self


class _Generator:
    """A configured generator that also counts RobX prototype warnings."""

    def __init__(self, kind: str, params: dict):
        self.kind = kind
        self.estimator = make_generator(kind, **params)
        self.no_prototype = 0

    def __call__(self, x0, model, buf, buffer_pred, rng_key, target=TARGET):
        # nearest neighbour is deterministic and needs no generator
        rng = None if self.kind == "nn" else make_rng(*rng_key)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoPrototypeWarning)
            x = self.estimator.generate(x0, target, model, rng, buf, buffer_pred)
        self.no_prototype += sum(issubclass(w.category, NoPrototypeWarning) for w in caught)
        return x


def _regenerate(method: str, cfg: ExperimentConfig, states: Sequence[CfeState], model,
                buf: LabeledBuffer, seed: int, tag: int):
    """Fresh counterfactuals for the active states; failures are dropped."""
    kind = _GENERATOR_FOR[method]
    generate = _Generator(kind, cfg.generator_params if kind == cfg.generator else {})
    pred = model.predict(buf.X)
    out, failures = [], 0
    for s in states:
        if not s.active:
            out.append(s)
            continue
        try:
            out.append(s.with_cf(generate(s.x0, model, buf, pred, (seed, tag, s.uid))))
        except GenerationError:
            failures += 1
            out.append(None)
    return out, failures


def _row(cfg: ExperimentConfig, method: str, repeat: int, seed: int, **extra) -> dict:
    return {"stream": cfg.stream_kind, "model": cfg.model_kind, "method": method,
            "repeat": repeat, "seed": seed, **extra}


def _metric_fields(report: CheckpointReport) -> dict:
    return {"validity": report.validity, "knn": report.knn, "kde": report.kde,
            "l2": report.l2, "active": report.active, "retired": report.retired}


def run_repeat(cfg: ExperimentConfig, repeat: int, seed: int,
               maintained: Optional[Dict[str, MaintenanceConfig]] = None,
               regen: Sequence[str] = (), track_frozen: bool = True,
               time_regeneration: bool = False) -> RunArtifacts:
    """One independent run of the streaming protocol.

    ``maintained`` maps method names to maintenance configurations; every
    entry maintains its own copy of the shared initial population against the
    same model and buffer. ``regen`` lists the regeneration baselines run
    after the stream. With ``time_regeneration`` NN and GS are additionally
    rerun (and timed) at ``cfg.runtime_checkpoints`` evenly spaced points.
    """
    maintained = dict(maintained or {})
    art = RunArtifacts()
    art.seeds.append(_row(cfg, "*", repeat, seed))

    stream = DriftingStream(cfg.stream_spec(seed))
    X_init, y_init = stream.take(cfg.initial_size, t=0)
    model = make_model(cfg.model_kind, **cfg.model_params).fit(X_init, y_init)
    buf = LabeledBuffer(cfg.buffer_capacity).extend(X_init, y_init)

    # query selection and initial counterfactuals
    pred0 = model.predict(X_init)
    candidates = np.flatnonzero(pred0 != TARGET)
    pick_rng = make_rng(seed, 1)
    n_pick = min(cfg.population, candidates.size)
    queries = np.sort(pick_rng.choice(candidates, size=n_pick, replace=False))
    buf_pred = model.predict(buf.X)
    states: List[CfeState] = []
    failures = 0
    generate = _Generator(cfg.generator, cfg.generator_params)
    for i, qi in enumerate(queries):
        try:
            x_cf = generate(X_init[qi], model, buf, buf_pred, (seed, 2, i))
        except GenerationError:
            failures += 1
            continue
        states.append(CfeState(X_init[qi].copy(), x_cf, TARGET, True, i))
    if n_pick and failures > 0.5 * n_pick:
        raise RepeatAborted(f"repeat {repeat}: {failures}/{n_pick} initial "
                            f"{cfg.generator} generations failed")
    if failures or generate.no_prototype:
        art.diagnostics.append(f"{cfg.stream_kind}/{cfg.model_kind} repeat {repeat}: "
                               f"{failures} initial generation failures, "
                               f"{generate.no_prototype} without prototypes")

    populations: Dict[str, List[CfeState]] = {}
    if track_frozen:
        populations["frozen"] = list(states)
    for name in maintained:
        populations[name] = list(states)
    maint_time = {name: 0.0 for name in maintained}
    maint_seed = int(make_rng(seed, 3).integers(2 ** 63))
    cadence = {name: c.cadence for name, c in maintained.items()}
    frozen_cadence = min(cadence.values(), default=10)

    regen_points = set()
    regen_time = {"nn": 0.0, "gs": 0.0}
    if time_regeneration:
        step = cfg.stream_length / cfg.runtime_checkpoints
        regen_points = {int(round(step * (j + 1))) for j in range(cfg.runtime_checkpoints)}

    for n in range(1, cfg.stream_length + 1):
        x, y = next(stream)
        model.learn_one(x, y)
        buf.push(x, y)

        if "frozen" in populations and n % frozen_cadence == 0:
            populations["frozen"] = [s.retired() if s.active and check_retire(s, model) else s
                                     for s in populations["frozen"]]
        for name, mcfg in maintained.items():
            if n % mcfg.cadence:
                continue
            start = time.perf_counter()
            outcomes = maintain_population(populations[name], model, buf, n // mcfg.cadence,
                                           mcfg, maint_seed)
            maint_time[name] += time.perf_counter() - start
            populations[name] = [o.state for o in outcomes]

        if n in regen_points:
            active = populations.get("frozen") or next(iter(populations.values()), [])
            for method in ("nn", "gs"):
                start = time.perf_counter()
                _regenerate(method, cfg, active, model, buf, seed, 10 + n)
                regen_time[method] += time.perf_counter() - start

        if n % cfg.checkpoint_interval == 0:
            cp = n // cfg.checkpoint_interval
            for name, pop in populations.items():
                rep = checkpoint_evaluate(pop, model, buf, cfg.metrics, cp, name)
                art.checkpoints.append(_row(cfg, name, repeat, seed, checkpoint=cp, t=n,
                                            **_metric_fields(rep)))
                art.timing.append(_row(cfg, name, repeat, seed, checkpoint=cp,
                                       seconds=rep.elapsed))
                if cp == cfg.n_checkpoints:
                    art.final.append(_row(cfg, name, repeat, seed, **_metric_fields(rep)))

    # regeneration baselines on the final model, same surviving index set
    reference = populations.get("frozen") or next(iter(populations.values()), list(states))
    for k, method in enumerate(regen):
        start = time.perf_counter()
        regenerated, n_fail = _regenerate(method, cfg, reference, model, buf, seed, 5 + k)
        elapsed = time.perf_counter() - start
        if n_fail:
            art.diagnostics.append(f"{cfg.stream_kind}/{cfg.model_kind} repeat {repeat}: "
                                   f"{n_fail} {method} regeneration failures")
        kept = [s for s in regenerated if s is not None]
        rep = checkpoint_evaluate(kept, model, buf, cfg.metrics, cfg.n_checkpoints, method)
        # failures are excluded from the metric denominators but not from the counts
        fields = _metric_fields(rep)
        fields["retired"] = len(reference) - rep.active
        art.final.append(_row(cfg, method, repeat, seed, **fields))
        if method == "robx-regen":
            art.runtime.append(_row(cfg, method, repeat, seed, schedule="final only",
                                    seconds=elapsed))
        elif not time_regeneration:
            art.runtime.append(_row(cfg, method, repeat, seed, schedule="final only",
                                    seconds=elapsed))

    for name, secs in maint_time.items():
        sweeps = cfg.stream_length // maintained[name].cadence
        art.runtime.append(_row(cfg, name, repeat, seed, schedule=f"{sweeps} updates",
                                seconds=secs))
    if time_regeneration:
        for method, secs in regen_time.items():
            art.runtime.append(_row(cfg, method, repeat, seed,
                                    schedule=f"{cfg.runtime_checkpoints} checkpoints",
                                    seconds=secs))
    return art


def _method_plan(cfg: ExperimentConfig):
    maintained = {}
    if "ours-p" in cfg.methods:
        maintained["ours-p"] = replace(cfg.maintenance, variant="p")
    if "ours-vp" in cfg.methods:
        maintained["ours-vp"] = replace(cfg.maintenance, variant="vp")
    regen = [m for m in REGEN_METHODS if m in cfg.methods]
    return maintained, regen, "frozen" in cfg.methods


def run_experiment(cfg: ExperimentConfig, time_regeneration: bool = False) -> RunArtifacts:
    """Run ``cfg.repeats`` independent repeats of the configured experiment."""
    maintained, regen, frozen = _method_plan(cfg)
    art = RunArtifacts(configs=[cfg])
    for repeat, seed in enumerate(repeat_seeds(cfg.seed, cfg.repeats)):
        logger.info("%s/%s repeat %d (seed %d)", cfg.stream_kind, cfg.model_kind, repeat, seed)
        try:
            art.extend(run_repeat(cfg, repeat, seed, maintained, regen, frozen,
                                  time_regeneration))
        except RepeatAborted as exc:
            logger.error("%s", exc)
            art.diagnostics.append(str(exc))
    return art


def measure_runtime(cfg: ExperimentConfig) -> RunArtifacts:
    """Timing runs: maintenance summed over all sweeps, NN/GS over evenly spaced
    regeneration checkpoints, RobX once at the end. Model training and
    stream generation are never inside a timed section."""
    cfg = cfg.replace(methods=tuple(m for m in cfg.methods if m != "frozen") or cfg.methods)
    return run_experiment(cfg, time_regeneration=True)


ABLATION_STREAMS = ("hyperplane", "sine", "sea")
ABLATION_MODELS = ("lr", "ht")
DEFAULT_LAMBDAS = (1.0, 2.0, 3.0, 4.0, 5.0, 10.0)


def run_ablation(cfg: ExperimentConfig, lambdas: Sequence[float] = DEFAULT_LAMBDAS,
                 streams: Sequence[str] = ABLATION_STREAMS,
                 models: Sequence[str] = ABLATION_MODELS) -> RunArtifacts:
    """Sweep the correction weight with the proximity weight fixed at 1.

    All weights share one stream pass per (stream, model, repeat): the
    maintained populations never influence the model or buffer, so this is
    equivalent to separate runs. Final-checkpoint means over every
    stream, model and repeat are returned in ``artifacts.ablation``.
    """
    art = RunArtifacts(configs=[cfg])
    maintained = {}
    for lu in lambdas:
        for variant in ("p", "vp"):
            maintained[f"ours-{variant}@{lu:g}"] = replace(cfg.maintenance, variant=variant,
                                                          lambda_u=float(lu), lambda_r=1.0)
    for stream_kind in streams:
        for model_kind in models:
            run_cfg = cfg.replace(stream_kind=stream_kind, model_kind=model_kind,
                                  n_features=None, stream_params={},
                                  model_params=cfg.model_params if model_kind == cfg.model_kind
                                  else {})
            for repeat, seed in enumerate(repeat_seeds(cfg.seed, cfg.repeats)):
                try:
                    art.extend(run_repeat(run_cfg, repeat, seed, maintained, (),
                                          track_frozen=False))
                except RepeatAborted as exc:
                    art.diagnostics.append(str(exc))
    art.ablation = aggregate_ablation(art.final, lambdas)
    return art


def _nanmean(values) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def aggregate_ablation(final_rows: Sequence[dict], lambdas: Sequence[float]) -> List[dict]:
    rows = []
    for lu in lambdas:
        row = {"lambda_u": float(lu)}
        for variant in ("p", "vp"):
            sel = [r for r in final_rows if r["method"] == f"ours-{variant}@{lu:g}"]
            for metric in ("validity", "knn", "l2"):
                row[f"{variant}_{metric}"] = _nanmean(r[metric] for r in sel)
        rows.append(row)
    return rows


def summarize(rows: Sequence[dict], keys=("stream", "model", "method"),
              metrics=("validity", "knn", "kde", "l2")) -> List[dict]:
    """Mean and (population) std per group over repeats, ignoring absent values."""
    groups: Dict[tuple, List[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key, members in groups.items():
        entry = dict(zip(keys, key))
        entry["n"] = len(members)
        for m in metrics:
            vals = [r[m] for r in members if r.get(m) is not None]
            entry[f"{m}_mean"] = float(np.mean(vals)) if vals else None
            entry[f"{m}_std"] = float(np.std(vals)) if vals else None
        out.append(entry)
    return out
