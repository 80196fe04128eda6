"""Blocking analysis and run-level efficiency metrics."""

import math
from collections import namedtuple

import numpy as np

BlockStats = namedtuple("BlockStats", "block ndata mean var std_err std_err_err")


def reblock(data):
    """Successive pair-averaging of a 1D series (Flyvbjerg-Petersen).

    Returns one :class:`BlockStats` per blocking level; level ``b`` averages
    blocks of 2**b consecutive points. A trailing odd point is dropped.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    out = []
    level = 0
    while len(x) >= 2:
        n = len(x)
        var = float(np.var(x, ddof=1))
        se = math.sqrt(var / n)
        out.append(BlockStats(level, n, float(np.mean(x)), var, se, se / math.sqrt(2.0 * (n - 1))))
        last = 2 * (n // 2)
        x = 0.5 * (x[:last:2] + x[1:last:2])
        level += 1
    return out


def optimal_block(stats, ndata=None):
    """First level satisfying B^3 >= 2 n (SE_B / SE_0)^4 (Lee et al. criterion).

    Returns None when no level qualifies (series too short).
    """
    if not stats:
        return None
    ndata = stats[0].ndata if ndata is None else ndata
    se0 = stats[0].std_err
    if se0 == 0.0:
        return 0
    best = None
    for s in reversed(stats):
        if 2.0 ** (3 * s.block) > 2.0 * ndata * (s.std_err / se0) ** 4:
            best = s.block
    return best


def autocorrelation_time(data):
    """tau_corr = (SE at the plateau block / naive SE)^2; 1 for white noise."""
    stats = reblock(data)
    if not stats:
        return float("nan")
    if stats[0].std_err == 0.0:
        return 1.0
    level = optimal_block(stats)
    if level is None:
        level = len(stats) - 1
    return (stats[level].std_err / stats[0].std_err) ** 2


def throughput(n_steps, mean_walkers, t_cpu):
    """P = M <N_w> / T_CPU, MC samples per second."""
    return n_steps * mean_walkers / t_cpu


def efficiency(sigma2, tau_corr, t_mc):
    """kappa = 1 / (sigma^2 tau_corr T_MC); infinite for a zero-variance estimator."""
    denom = sigma2 * tau_corr * t_mc
    return math.inf if denom == 0.0 else 1.0 / denom
