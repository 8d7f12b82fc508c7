"""Parameter sweeps over ``(N, T, chi)`` with resumable, deterministic output.

Config files are TOML::

    [sweep]
    N = [6, 7]
    T = [0.5, 0.55]            # or beta = [...]; or a [sweep.T_by_N] table
    chi = [70, 96, 128]
    output_dir = "runs/ordered"
    workers = 1
    checkpoints = true

    [sweep.T_by_N]             # optional, overrides T for the listed N
    "6" = [0.60, 0.62]

    [ctmrg]
    eps = 1e-8
    max_iters = 5000
    init_mode = "bulk"         # bulk | random
    seed = 0
    schedule = [[1e-2, 1e-5], [1e-4, 1e-5], [0.0, 1e-8]]

    [warm_start]
    chi_ladder = false         # start each chi from the converged smaller chi
    T_chain = false            # start each T from the converged previous T

    [critical_temps]           # optional T_L table used by the analysis commands
    "6" = 0.68

Unknown keys are errors.  ``CLOCKFDS_OUTPUT_DIR`` and ``CLOCKFDS_WORKERS``
override the output directory and the number of worker processes.

Points that share a warm-start chain run sequentially in one worker; separate
chains run in parallel.  Only the parent process appends to ``results.csv``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import multiprocessing as mp
import os
import queue as queue_mod
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import tomli

from .ctmrg import DEFAULT_SCHEDULE, CtmrgConfig, anneal_run
from .io import append_records, read_checkpoint, read_records, write_checkpoint
from .observables import ObservableRecord, measure
from .tensors import ClockParams, bulk_tensor

__all__ = ["SweepConfig", "SweepPoint", "load_config", "run_sweep", "ConfigError", "RESULTS_NAME"]

logger = logging.getLogger(__name__)

RESULTS_NAME = "results.csv"
FAILURES_NAME = "failures.jsonl"
ENV_OUTPUT_DIR = "CLOCKFDS_OUTPUT_DIR"
ENV_WORKERS = "CLOCKFDS_WORKERS"

_SCHEMA = {
    "sweep": {"N", "T", "beta", "chi", "output_dir", "workers", "checkpoints", "T_by_N"},
    "ctmrg": {"eps", "max_iters", "init_mode", "seed", "schedule"},
    "warm_start": {"chi_ladder", "T_chain"},
    "critical_temps": None,  # free-form N -> T_L
    "critical_window": None,  # free-form N -> [T_low, T_high]
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepPoint:
    N: int
    T: float
    chi: int

    @property
    def run_id(self) -> str:
        return f"N{self.N}_T{self.T:.10g}_chi{self.chi}"


@dataclass
class SweepConfig:
    N: list[int]
    T_by_N: dict[int, list[float]]
    chi: list[int]
    output_dir: Path = Path("runs")
    workers: int = 1
    checkpoints: bool = True
    eps: float = 1e-8
    max_iters: int = 5000
    init_mode: str = "bulk"
    seed: int = 0
    schedule: tuple = DEFAULT_SCHEDULE
    chi_ladder: bool = False
    T_chain: bool = False
    critical_temps: dict[int, float] = field(default_factory=dict)
    critical_window: dict[int, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        self.N = [int(n) for n in self.N]
        self.chi = sorted(int(c) for c in self.chi)
        if not self.N or not self.chi:
            raise ConfigError("sweep needs non-empty N and chi lists")
        for n in self.N:
            if n < 2:
                raise ConfigError(f"N must be >= 2, got {n}")
            if n not in self.T_by_N or not self.T_by_N[n]:
                raise ConfigError(f"no temperatures for N={n}")
            for T in self.T_by_N[n]:
                if not T > 0:
                    raise ConfigError(f"temperatures must be positive, got {T}")
        if any(c < 1 for c in self.chi):
            raise ConfigError("chi values must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.init_mode not in ("bulk", "random"):
            raise ConfigError("init_mode must be 'bulk' or 'random' in a sweep")
        self.T_by_N = {int(n): sorted(float(t) for t in ts) for n, ts in self.T_by_N.items()}
        try:
            self.ctmrg_config(self.chi[0])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.output_dir = Path(self.output_dir)

    def ctmrg_config(self, chi: int, warm_env=None) -> CtmrgConfig:
        if warm_env is not None:
            return CtmrgConfig(chi, self.eps, self.max_iters, self.schedule, "warm", self.seed, warm_env)
        return CtmrgConfig(chi, self.eps, self.max_iters, self.schedule, self.init_mode, self.seed)

    def points(self) -> list[SweepPoint]:
        return [SweepPoint(n, T, c) for n in self.N for T in self.T_by_N[n] for c in self.chi]

    def chains(self) -> list[list[SweepPoint]]:
        """Groups of points that depend on each other through warm starts, in run order."""
        out = []
        for n in self.N:
            Ts = self.T_by_N[n]
            if self.chi_ladder and self.T_chain:
                out.append([SweepPoint(n, T, c) for c in self.chi for T in Ts])
            elif self.chi_ladder:
                out.extend([SweepPoint(n, T, c) for c in self.chi] for T in Ts)
            elif self.T_chain:
                out.extend([SweepPoint(n, T, c) for T in Ts] for c in self.chi)
            else:
                out.extend([SweepPoint(n, T, c)] for T in Ts for c in self.chi)
        return out

    def predecessor(self, p: SweepPoint) -> SweepPoint | None:
        """The point whose environment warm-starts ``p`` (None for a cold start)."""
        if self.chi_ladder:
            i = self.chi.index(p.chi)
            if i > 0:
                return SweepPoint(p.N, p.T, self.chi[i - 1])
            if not self.T_chain:
                return None
        if self.T_chain:
            Ts = self.T_by_N[p.N]
            i = Ts.index(p.T)
            if i > 0:
                return SweepPoint(p.N, Ts[i - 1], p.chi)
        return None

    def point_hash(self, p: SweepPoint) -> str:
        """Content hash of everything that determines the result of ``p``."""
        pred = self.predecessor(p)
        doc = {
            "N": p.N, "T": repr(float(p.T)), "chi": p.chi, "eps": repr(self.eps),
            "max_iters": self.max_iters, "init_mode": self.init_mode,
            "seed": self.seed if self.init_mode == "random" else None,
            "schedule": [[repr(h), repr(e)] for h, e in self.schedule],
            "warm_from": None if pred is None else self.point_hash(pred),
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        d = asdict(self)
        d["output_dir"] = str(self.output_dir)
        d["T_by_N"] = {str(k): v for k, v in self.T_by_N.items()}
        d["critical_temps"] = {str(k): v for k, v in self.critical_temps.items()}
        d["critical_window"] = {str(k): list(v) for k, v in self.critical_window.items()}
        return d


def _check_keys(doc: dict):
    for top, val in doc.items():
        if top not in _SCHEMA:
            raise ConfigError(f"unknown config section [{top}]")
        allowed = _SCHEMA[top]
        if not isinstance(val, dict):
            raise ConfigError(f"[{top}] must be a table")
        if allowed is None:
            continue
        for k in val:
            if k not in allowed:
                raise ConfigError(f"unknown key '{k}' in [{top}]")


def _int_keyed(table: dict, what: str) -> dict:
    out = {}
    for k, v in table.items():
        try:
            out[int(k)] = v
        except ValueError:
            raise ConfigError(f"{what} keys must be integers N, got {k!r}") from None
    return out


def config_from_dict(doc: dict, env: dict | None = None) -> SweepConfig:
    env = os.environ if env is None else env
    _check_keys(doc)
    sw = doc.get("sweep")
    if sw is None:
        raise ConfigError("missing [sweep] section")
    for k in ("N", "chi"):
        if k not in sw:
            raise ConfigError(f"[sweep] needs '{k}'")
    Ns = sw["N"] if isinstance(sw["N"], list) else [sw["N"]]
    if "T" in sw and "beta" in sw:
        raise ConfigError("give either T or beta, not both")
    base = None
    if "T" in sw:
        base = [float(t) for t in sw["T"]]
    elif "beta" in sw:
        base = [1.0 / float(b) for b in sw["beta"]]
    T_by_N = {int(n): list(base) for n in Ns} if base is not None else {}
    for n, ts in _int_keyed(sw.get("T_by_N", {}), "T_by_N").items():
        T_by_N[n] = [float(t) for t in ts]
    ct = doc.get("ctmrg", {})
    ws = doc.get("warm_start", {})
    kwargs = dict(
        N=Ns, T_by_N=T_by_N, chi=sw["chi"],
        output_dir=Path(env.get(ENV_OUTPUT_DIR) or sw.get("output_dir", "runs")),
        workers=int(env.get(ENV_WORKERS) or sw.get("workers", 1)),
        checkpoints=bool(sw.get("checkpoints", True)),
        chi_ladder=bool(ws.get("chi_ladder", False)), T_chain=bool(ws.get("T_chain", False)),
        critical_temps={n: float(v) for n, v in _int_keyed(doc.get("critical_temps", {}), "critical_temps").items()},
        critical_window={
            n: (float(v[0]), float(v[1])) for n, v in _int_keyed(doc.get("critical_window", {}), "critical_window").items()
        },
    )
    for k in ("eps", "max_iters", "init_mode", "seed"):
        if k in ct:
            kwargs[k] = ct[k]
    if "schedule" in ct:
        kwargs["schedule"] = tuple((float(h), float(e)) for h, e in ct["schedule"])
    try:
        return SweepConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, env: dict | None = None) -> SweepConfig:
    with open(path, "rb") as fh:
        try:
            doc = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc, env)


# execution ----------------------------------------------------------------------------


def _checkpoint_path(out: Path, p: SweepPoint, h: str) -> Path:
    return out / "checkpoints" / f"{p.run_id}_{h}.fdsc"


def _run_point(cfg: SweepConfig, p: SweepPoint, warm_env) -> tuple[ObservableRecord, object]:
    params = ClockParams.from_temperature(p.N, p.T)
    env, reports = anneal_run(params, cfg.ctmrg_config(p.chi, warm_env))
    bulk = bulk_tensor(params)
    final = reports[-1]
    rec = measure(
        env, bulk, iterations=sum(r.iterations for r in reports), converged=final.converged,
        eps_final=final.final_delta, run_id=p.run_id, config_hash=cfg.point_hash(p),
    )
    return rec, env


def _run_chain(cfg: SweepConfig, chain: list[SweepPoint], done: frozenset, queue=None):
    """Run one warm-start chain; results go to ``queue`` (or are returned)."""
    out = []
    envs: dict[SweepPoint, object] = {}
    for p in chain:
        h = cfg.point_hash(p)
        pred = cfg.predecessor(p)
        if h in done:
            if cfg.checkpoints and any(cfg.predecessor(q) == p for q in chain):
                ck = _checkpoint_path(cfg.output_dir, p, h)
                if ck.exists():
                    envs[p] = read_checkpoint(ck)[0]
            continue
        t0 = time.perf_counter()
        try:
            warm = None
            if pred is not None:
                if pred not in envs:
                    raise RuntimeError(f"warm-start source {pred.run_id} unavailable")
                warm = envs[pred]
            rec, env = _run_point(cfg, p, warm)
            envs[p] = env
            if cfg.checkpoints:
                write_checkpoint(
                    _checkpoint_path(cfg.output_dir, p, h), env,
                    {"N": p.N, "T": p.T, "chi": p.chi, "config_hash": h, "stage": "final",
                     "schedule": [list(s) for s in cfg.schedule], "finished": time.time()},
                )
            msg = ("ok", rec, time.perf_counter() - t0)
        except Exception as exc:  # recorded, never aborts the sweep
            msg = ("fail", {"run_id": p.run_id, "config_hash": h, "error": repr(exc),
                            "traceback": traceback.format_exc()}, time.perf_counter() - t0)
        if queue is not None:
            queue.put(msg)
        else:
            out.append(msg)
    return out


def _handle(cfg: SweepConfig, msg, written: list):
    kind, payload, secs = msg
    if kind == "ok":
        append_records(cfg.output_dir / RESULTS_NAME, [payload])
        written.append(payload)
        logger.info("%s: M=%.6g xi=%.6g iters=%d%s (%.1fs)", payload.run_id, payload.M, payload.xi,
                    payload.iterations, "" if payload.converged else " NOT CONVERGED", secs)
    else:
        with open(cfg.output_dir / FAILURES_NAME, "a") as fh:
            fh.write(json.dumps(payload) + "\n")
        logger.warning("%s failed: %s", payload["run_id"], payload["error"])


def run_sweep(cfg: SweepConfig) -> list[ObservableRecord]:
    """Run every point not yet in ``results.csv``; returns the newly written records."""
    out = cfg.output_dir
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_json(), indent=1, sort_keys=True))
    done = frozenset(r.config_hash for r in read_records(out / RESULTS_NAME))
    chains = [c for c in cfg.chains() if any(cfg.point_hash(p) not in done for p in c)]
    logger.info("%d chains to run (%d points already done)", len(chains), len(done))
    written: list[ObservableRecord] = []
    if cfg.workers == 1 or len(chains) <= 1:
        for chain in chains:
            for msg in _run_chain(cfg, chain, done):
                _handle(cfg, msg, written)
        return written
    total = sum(1 for c in chains for p in c if cfg.point_hash(p) not in done)
    with mp.Manager() as mgr:
        q = mgr.Queue()
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futs = [pool.submit(_run_chain, cfg, c, done, q) for c in chains]
            got = 0
            while got < total:
                try:
                    msg = q.get(timeout=1.0)
                except queue_mod.Empty:
                    if all(f.done() for f in futs) and q.empty():
                        break
                    continue
                _handle(cfg, msg, written)
                got += 1
            for f in futs:
                f.result()
    return written
