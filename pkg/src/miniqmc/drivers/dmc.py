"""VMC/DMC drivers: particle-by-particle drift-diffusion, branching, E_T feedback.

Every random number a walker consumes in generation ``step`` comes from a
counter-based Philox stream keyed by (seed, walker id) with the step in
the counter, so results do not depend on thread count or crowd layout.
"""

import logging
import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..engine import Engine
from ..errors import NearSingularUpdate, QMCError, SingularMatrixError
from ..particles import Walker, load_walker, store_walker
from .stats import autocorrelation_time, efficiency, throughput
from .timers import KernelTimers

log = logging.getLogger(__name__)

_INIT_COUNTER = 1 << 62


class WalkerFlagged(QMCError):
    """A walker could not be advanced even after a from-scratch refresh."""


def walker_stream(seed, walker_id, step):
    """Independent Philox generator for one (seed, walker, generation)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, walker_id], dtype=np.uint64)
    counter = np.array([0, 0, 0, step], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


@dataclass
class RunParams:
    tau: float = 0.01
    n_steps: int = 10
    target_pop: int = 4
    n_threads: int = 1
    refresh_period: int = None
    precision: str = "double"
    variant: str = "opt"
    seed: int = 2017
    driver: str = "dmc"
    policy: str = "on_the_fly"
    timers: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if self.n_threads < 1 or self.target_pop < self.n_threads:
            raise ValueError("need target_pop >= n_threads >= 1")
        if self.driver not in ("vmc", "dmc"):
            raise ValueError("driver must be 'vmc' or 'dmc'")
        if self.refresh_period is None:
            self.refresh_period = 16 if self.precision == "mixed" else 64


@dataclass
class PopulationStats:
    e_trial: list = field(default_factory=list)
    e_step: list = field(default_factory=list)
    population: list = field(default_factory=list)
    e_mean: float = float("nan")
    sigma2: float = float("nan")
    tau_corr: float = float("nan")
    mean_walkers: float = 0.0
    t_mc: float = 0.0
    kappa: float = float("nan")
    throughput: float = float("nan")
    n_accept: int = 0
    n_reject: int = 0
    clamp_warnings: int = 0
    n_flagged: int = 0

    @property
    def acceptance(self):
        n = self.n_accept + self.n_reject
        return self.n_accept / n if n else float("nan")


def pbyp_sweep(engine, rng, tau):
    """One ordered sweep of drift-diffusion moves over all electrons.

    Proposal r' = r + tau G(r) + chi with chi ~ N(0, tau); acceptance
    min(1, |rho|^2 T(r'->r)/T(r->r')) with the Gaussian drift kernel T.
    Returns (n_accept, n_reject).
    """
    e, psi = engine.electrons, engine.psi
    acc = rej = 0
    sqrt_tau = math.sqrt(tau)
    for k in range(e.n):
        g_old = psi.eval_grad(e, k)
        chi = rng.normal(size=3) * sqrt_tau
        r_old = e.R[k].copy()
        r_new = r_old + tau * g_old + chi
        e.make_move(k, r_new)
        rho, g_new = psi.ratio_grad(e, k)
        if tau > 0:
            back = r_old - r_new - tau * g_new
            log_t = (chi @ chi - back @ back) / (2.0 * tau)
        else:
            log_t = 0.0
        prob = rho * rho * math.exp(min(log_t, 700.0))
        if rng.uniform() < prob:
            try:
                psi.accept_move(e, k)
            except NearSingularUpdate:
                _retry_accept(engine, k, r_new)
            acc += 1
        else:
            psi.reject_move(e, k)
            rej += 1
    return acc, rej


def _retry_accept(engine, k, r_new):
    e, psi = engine.electrons, engine.psi
    psi.reject_move(e, k)
    try:
        psi.recompute_from_scratch(e)
        e.make_move(k, r_new)
        psi.ratio_grad(e, k)
        psi.accept_move(e, k)
    except (NearSingularUpdate, SingularMatrixError) as exc:
        raise WalkerFlagged(str(exc)) from exc


def measure(engine, rng, timers=None):
    """Refresh tables and derivatives, then evaluate E_L (returns the breakdown)."""
    e, psi = engine.electrons, engine.psi
    e.update()
    psi.evaluate_derivatives(e)
    return engine.hamiltonian.local_energy(psi, e, engine.ions, rng, timers)


def advance_walker(engine, walker, step, params, timers):
    """Load, sweep, measure and store one walker for generation ``step``.

    Returns (e_local, u_branch, n_accept, n_reject).
    """
    rng = walker_stream(params.seed, walker.walker_id, step)
    e, psi = engine.electrons, engine.psi
    try:
        load_walker(e, walker, psi)
        acc, rej = pbyp_sweep(engine, rng, params.tau)
        if (step + 1) % params.refresh_period == 0:
            psi.recompute_from_scratch(e)
        el = measure(engine, rng, timers).total
        store_walker(e, walker, psi)
    except (WalkerFlagged, SingularMatrixError) as exc:
        log.warning("walker %d flagged at step %d: %s", walker.walker_id, step, exc)
        walker.flagged = True
        return walker.e_local, 0.0, 0, 0
    walker.age = walker.age + 1 if acc == 0 else 0
    return el, float(rng.uniform()), acc, rej


def initialize_walker(engine, system, walker_id, params):
    rng = walker_stream(params.seed, walker_id, _INIT_COUNTER)
    R = system.initial_electrons(rng)
    engine.electrons.set_positions(R)
    engine.psi.recompute_from_scratch(engine.electrons)
    el = measure(engine, rng).total
    w = Walker(R, weight=1.0, e_local=el, walker_id=walker_id)
    store_walker(engine.electrons, w, engine.psi)
    return w


def load_balance(n_walkers, n_threads):
    """Contiguous crowds, sizes differing by at most one (larger crowds first)."""
    base, extra = divmod(n_walkers, n_threads)
    sizes = [base + (1 if c < extra else 0) for c in range(n_threads)]
    bounds = []
    start = 0
    for s in sizes:
        bounds.append((start, start + s))
        start += s
    return bounds


def update_trial_energy(e_mean, n_walkers, target_pop, tau):
    """E_T = E_mean - ln(N_w / target) / tau."""
    return e_mean - math.log(n_walkers / target_pop) / tau


def reweight(walker, e_new, tau, e_trial):
    walker.weight *= math.exp(-tau * (0.5 * (e_new + walker.e_local) - e_trial))
    walker.e_local = e_new
    return walker.weight


def multiplicity(weight, u):
    return int(math.floor(weight + u))


def branch(walkers, uniforms, target_pop, next_id):
    """Stochastic-rounding comb: floor(w + u) copies, each with weight 1.

    Returns (new_walkers, next_id, clamped).
    """
    out = []
    for w, u in zip(walkers, uniforms):
        m = 0 if w.flagged else multiplicity(w.weight, u)
        w.multiplicity = m
        for c in range(m):
            if c == 0:
                clone = w
            else:
                clone = w.copy(walker_id=next_id)
                next_id += 1
            clone.weight = 1.0
            out.append(clone)
    clamped = False
    hi, lo = 2 * target_pop, max(1, (target_pop + 1) // 2)
    if len(out) > hi:
        out = out[:hi]
        clamped = True
    elif 0 < len(out) < lo:
        base = len(out)
        i = 0
        while len(out) < lo:
            out.append(out[i % base].copy(walker_id=next_id))
            next_id += 1
            i += 1
        clamped = True
    if not out:
        raise QMCError("population died out")
    return out, next_id, clamped


def branch_and_reweight(walkers, e_new, uniforms, tau, e_trial, target_pop, next_id):
    for w, el in zip(walkers, e_new):
        reweight(w, el, tau, e_trial)
    return branch(walkers, uniforms, target_pop, next_id)


@dataclass
class RunResult:
    stats: PopulationStats
    timers: KernelTimers
    busy_seconds: float
    walkers: list
    params: RunParams
    energies: list = field(default_factory=list)
    logpsi_checksum: float = 0.0
    partial: bool = False
    next_step: int = 0
    e_trial: float = float("nan")
    next_id: int = 0


def run(params, system, engines=None, walkers=None, progress=None, checkpoint=None):
    """Execute ``params.n_steps`` generations of VMC or DMC on ``system``.

    ``checkpoint`` (from :func:`load_checkpoint`) resumes a previous run:
    its population, generation counter and trial energy are reused, so the
    continued run draws the same random numbers as an uninterrupted one.
    """
    engines = engines or [Engine(system, params.variant, params.precision, params.policy)
                          for _ in range(params.n_threads)]
    timers = [KernelTimers(params.timers) for _ in engines]
    for eng, t in zip(engines, timers):
        eng.electrons.timers = t
        eng.psi.timers = t
    first_step = 0
    e_trial = None
    if checkpoint is not None:
        walkers = checkpoint.walkers
        first_step = checkpoint.step
        e_trial = checkpoint.e_trial
    if walkers is None:
        walkers = [initialize_walker(engines[0], system, wid, params)
                   for wid in range(params.target_pop)]
    next_id = max(w.walker_id for w in walkers) + 1
    if checkpoint is not None:
        next_id = max(next_id, checkpoint.next_id)
    stats = PopulationStats()
    if e_trial is None:
        e_trial = float(np.mean([w.e_local for w in walkers]))
    busy = [0.0] * len(engines)
    energies = []
    all_e = []
    partial = False

    def work(c, lo, hi, step):
        t0 = time.perf_counter()
        out = [advance_walker(engines[c], walkers[i], step, params, timers[c])
               for i in range(lo, hi)]
        busy[c] += time.perf_counter() - t0
        return out

    t_start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=len(engines)) as pool:
        for step in range(first_step, first_step + params.n_steps):
            bounds = load_balance(len(walkers), len(engines))
            futures = [pool.submit(work, c, lo, hi, step) for c, (lo, hi) in enumerate(bounds)]
            results = [r for f in futures for r in f.result()]
            e_new = [r[0] for r in results]
            uniforms = [r[1] for r in results]
            stats.n_accept += sum(r[2] for r in results)
            stats.n_reject += sum(r[3] for r in results)
            flagged = sum(w.flagged for w in walkers)
            stats.n_flagged += flagged
            energies.append(e_new)
            all_e.extend(e for e, w in zip(e_new, walkers) if not w.flagged)
            if params.driver == "dmc":
                for w, el in zip(walkers, e_new):
                    reweight(w, el, params.tau, e_trial)
                wsum = sum(w.weight for w in walkers if not w.flagged)
                e_mean = (sum(w.weight * w.e_local for w in walkers if not w.flagged) / wsum
                          if wsum > 0 else float("nan"))
                walkers, next_id, clamped = branch(walkers, uniforms, params.target_pop, next_id)
                stats.clamp_warnings += int(clamped)
                e_trial = update_trial_energy(e_mean, len(walkers), params.target_pop, params.tau)
            else:
                for w, el in zip(walkers, e_new):
                    w.e_local = el
                good = [el for el, w in zip(e_new, walkers) if not w.flagged]
                e_mean = float(np.mean(good)) if good else float("nan")
            stats.e_step.append(e_mean)
            stats.e_trial.append(e_trial)
            stats.population.append(len(walkers))
            if progress is not None:
                progress(step, stats)
            if flagged > 0.01 * len(walkers):
                log.error("walker flag storm at step %d (%d flagged)", step, flagged)
                partial = True
                break
    t_mc = time.perf_counter() - t_start
    merged = KernelTimers(params.timers)
    for t in timers:
        merged.merge(t)
    _finalize(stats, np.array(all_e), t_mc, len(stats.e_step))
    checksum = float(sum(w.buffer[0] for w in walkers))
    return RunResult(stats, merged, sum(busy), walkers, params, energies, checksum,
                     partial, first_step + len(stats.e_step), e_trial, next_id)


def _finalize(stats, samples, t_mc, n_steps):
    stats.t_mc = t_mc
    stats.mean_walkers = float(np.mean(stats.population)) if stats.population else 0.0
    if n_steps:
        stats.e_mean = float(np.mean(stats.e_step))
        stats.sigma2 = float(np.var(samples)) if samples.size else float("nan")
        stats.tau_corr = float(autocorrelation_time(stats.e_step)) if n_steps >= 2 else 1.0
        stats.throughput = throughput(n_steps, stats.mean_walkers, t_mc) if t_mc > 0 else float("nan")
        stats.kappa = efficiency(stats.sigma2, stats.tau_corr, t_mc)


_CKPT_MAGIC = b"MQCK"
_CKPT_HEAD = struct.Struct("<4sqqqqd")
_WALKER_META = struct.Struct("<qq")


@dataclass
class Checkpoint:
    walkers: list
    step: int
    seed: int
    next_id: int
    e_trial: float


def save_checkpoint(path, result_or_walkers, step=None, seed=None, next_id=None, e_trial=None):
    """Write the population plus the stream counters needed to resume.

    The per-walker random streams are fully determined by (seed, walker id,
    step), so storing those three is enough to continue bit-for-bit.
    """
    if isinstance(result_or_walkers, RunResult):
        r = result_or_walkers
        walkers, step, seed = r.walkers, r.next_step, r.params.seed
        next_id, e_trial = r.next_id, r.e_trial
    else:
        walkers = result_or_walkers
    parts = [_CKPT_HEAD.pack(_CKPT_MAGIC, len(walkers), step, seed, next_id, e_trial)]
    for w in walkers:
        parts.append(_WALKER_META.pack(w.walker_id, w.age))
        parts.append(w.to_bytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, n, step, seed, next_id, e_trial = _CKPT_HEAD.unpack_from(data, 0)
    if magic != _CKPT_MAGIC:
        raise ValueError("%s is not a checkpoint file" % path)
    off = _CKPT_HEAD.size
    walkers = []
    for _ in range(n):
        wid, age = _WALKER_META.unpack_from(data, off)
        off += _WALKER_META.size
        w, used = Walker.from_bytes(data, off)
        off += used
        w.walker_id, w.age = wid, age
        walkers.append(w)
    return Checkpoint(walkers, step, seed, next_id, e_trial)
