"""Memory accounting and the JSON/CSV run report."""

import csv
import json
import math
import platform
import time

import numpy as np

from .containers import padded_size
from .presets import preset as get_preset

SCHEMA_VERSION = "1.0"
GAMMA_DEFAULT = 60  # bytes per N^2 per walker-or-thread, double precision
# always present in "stats"; null when a command does not produce them
STATS_KEYS = ("e_mean", "sigma2", "tau_corr", "kappa", "throughput")


def memory_model(preset, n_threads, n_walkers, gamma=GAMMA_DEFAULT):
    """Predicted O(N^2) footprint of the reference code: gamma (N_th + N_w) N^2 bytes."""
    if n_threads < 1 or n_walkers < 1:
        raise ValueError("thread and walker counts must be positive")
    n = preset if isinstance(preset, (int, np.integer)) else get_preset(preset).n_electrons
    return int(gamma * (n_threads + n_walkers) * n * n)


def walker_component_bytes(n, n_ions, variant, precision="double", jastrow=True):
    """Per-walker buffer bytes by wavefunction component.

    The two-body Jastrow holds 5N^2 scalars in ``ref`` (value, 3 gradient
    components and laplacian per pair) and 5N in ``opt``; each determinant
    block holds its (N/2)^2 inverse plus log value and sign.
    """
    item = 8 if precision == "double" else 4
    half = n // 2
    out = {}
    if jastrow and n_ions:
        out["J1"] = 5 * n * item
    if jastrow:
        out["J2"] = (5 * n * n if variant == "ref" else 5 * n) * item
    out["Detup"] = (half * half + 2) * item
    out["Detdn"] = (half * half + 2) * item
    return out


def table_bytes(n, n_ions, variant, precision="double", block=16):
    """Per-thread distance-table bytes (distances plus displacements)."""
    item = 8 if precision == "double" else 4
    if variant == "ref":
        aa = 4 * (n * (n - 1) // 2)
    else:
        aa = 4 * n * padded_size(n, block)
    ab = 4 * n * padded_size(n_ions, block) if n_ions else 0
    return {"AA": aa * item, "AB": ab * item}


def memory_report(preset_name, variant, precision, n_threads, n_walkers, engines=None,
                  walkers=None, gamma=GAMMA_DEFAULT):
    p = get_preset(preset_name)
    n = p.n_electrons
    per_walker = walker_component_bytes(n, p.n_ions, variant, precision, p.jastrow)
    out = {
        "per_walker_bytes": per_walker,
        "per_walker_total": int(sum(per_walker.values())),
        "per_thread_table_bytes": table_bytes(n, p.n_ions, variant, precision),
        "model": {
            "gamma": gamma,
            "n_threads": n_threads,
            "n_walkers": n_walkers,
            "predicted_bytes": memory_model(n, n_threads, n_walkers, gamma),
            "formula": "gamma * (N_th + N_w) * N^2",
        },
        "bspline": {
            "synthetic_bytes": int(p.spline_table_bytes),
            "synthetic_label": "synthetic double-precision table, grid %s x %d orbitals (padded)"
                               % ("x".join(map(str, p.grid)), padded_size(p.n_spo_built)),
            "published_gb": p.table_bspline_gb,
            "published_label": "published workload value (real orbitals)",
        },
        "measured": None,
    }
    if engines:
        measured = {"threads": int(sum(e.memory_bytes() for e in engines))}
        if walkers is not None:
            measured["walker_buffers"] = int(sum(w.buffer.nbytes + w.R.nbytes for w in walkers))
        measured["spline_table"] = int(engines[0].psi.spo.nbytes)
        comps = engines[0].psi.memory_by_component()
        measured["components_per_thread"] = {k: int(v) for k, v in comps.items()}
        out["measured"] = measured
    return out


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def build_report(command, meta, timers=None, wall=None, stats=None, memory=None, checksums=None,
                 kernel=None):
    meta = dict(meta)
    meta.update(command=command, python=platform.python_version(), numpy=np.__version__,
                created=time.strftime("%Y-%m-%dT%H:%M:%S"))
    report = {"schema_version": SCHEMA_VERSION, "meta": meta}
    if timers is not None:
        report["timers"] = dict(timers.seconds)
        report["timers_normalized"] = timers.normalized(wall if wall else timers.total())
    report["stats"] = dict.fromkeys(STATS_KEYS)
    report["stats"].update(stats or {})
    report["memory"] = memory or {}
    report["checksums"] = checksums or {}
    if kernel is not None:
        report["kernel"] = kernel
    return _clean(report)


def stats_dict(stats):
    return {
        "e_mean": stats.e_mean,
        "sigma2": stats.sigma2,
        "tau_corr": stats.tau_corr,
        "kappa": stats.kappa,
        "throughput": stats.throughput,
        "mean_walkers": stats.mean_walkers,
        "t_mc": stats.t_mc,
        "acceptance": stats.acceptance,
        "n_steps": len(stats.e_step),
        "final_population": stats.population[-1] if stats.population else None,
        "clamp_warnings": stats.clamp_warnings,
        "n_flagged": stats.n_flagged,
    }


def write_json(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_csv(stats, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "e_mean", "e_trial", "population"])
        for i, (e, et, n) in enumerate(zip(stats.e_step, stats.e_trial, stats.population)):
            w.writerow([i, repr(float(e)), repr(float(et)), n])
