"""Cost-volume construction benchmark: DS-AFE vs explicit shift-and-concat.

Both methods consume the same features and weights and must agree on the
interior region before any timing is reported. Times are wall-clock
medians over `repeats` runs after two warmups; the pipeline stages mirror
the disparity network (feature extraction, cost volume construction,
aggregation, regression), and only the cost-volume stage differs.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .networks import DistgDisp, DistgDispConfig, regress_disparity
from .oracles import interior_margin, oracle_shift_and_concat
from .tensor import Tensor, no_grad

STAGES = ("feature_extraction", "cost_volume", "aggregation", "regression")


class BenchEqualityError(RuntimeError):
    """The two cost-volume routes disagreed; timings are not reported."""


@dataclass
class BenchResult:
    method: str
    stage_ms: dict = field(default_factory=dict)
    n_shifts: int = 0
    speedup: float | None = None  # cost-volume stage, relative to the other method

    @property
    def total_ms(self):
        return sum(self.stage_ms.values())


def _median_time(fn, repeats):
    fn()
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(times))


def bench_cost_volume(
    ang_res=9,
    height=64,
    width=64,
    channels=8,
    levels=tuple(range(-4, 5)),
    repeats=5,
    seed=0,
    n_spatial_blocks=2,
    n_agg_convs=4,
    equality_tol=1e-5,
):
    """Returns (ds_afe BenchResult, shift_and_concat BenchResult)."""
    nn.seed(seed)
    rng = np.random.default_rng(seed)
    cfg = DistgDispConfig(
        ang_res=ang_res,
        channels=channels,
        n_spatial_blocks=n_spatial_blocks,
        n_agg_convs=n_agg_convs,
        levels=tuple(levels),
    )
    net = DistgDisp(cfg).eval()
    x = Tensor(rng.random((1, 1, ang_res * height, ang_res * width), dtype=np.float32))

    with no_grad():
        feats = net.extract_features(x)
        vol_ds = net.build_cost_volume(feats)
        weights = net.cost.weight.data
        bias = net.cost.bias.data
        vol_oracle, n_shifts = oracle_shift_and_concat(
            feats.data, ang_res, weights, bias, cfg.levels.levels
        )
        margin = interior_margin(cfg.levels.levels, ang_res)
        inner = (Ellipsis, slice(margin, -margin), slice(margin, -margin))
        diff = float(np.abs(vol_ds.data[inner] - vol_oracle[inner]).max())
        scale = max(1.0, float(np.abs(vol_ds.data[inner]).max()))
        if diff > equality_tol * scale:
            raise BenchEqualityError(
                f"cost volumes differ on the interior (max abs diff {diff:.3e}, "
                f"scale {scale:.3e}); refusing to time"
            )

        stage_fns = {
            "feature_extraction": lambda: net.extract_features(x),
            "aggregation": lambda: net.aggregate(vol_ds),
        }
        logits = net.aggregate(vol_ds)
        stage_fns["regression"] = lambda: regress_disparity(logits, cfg.levels)

        shared_ms = {name: _median_time(fn, repeats) for name, fn in stage_fns.items()}
        ds_ms = _median_time(lambda: net.build_cost_volume(feats), repeats)
        oracle_ms = _median_time(
            lambda: oracle_shift_and_concat(feats.data, ang_res, weights, bias, cfg.levels.levels),
            repeats,
        )

    ds = BenchResult("ds_afe", dict(shared_ms, cost_volume=ds_ms), n_shifts=0)
    oracle = BenchResult("shift_and_concat", dict(shared_ms, cost_volume=oracle_ms), n_shifts=n_shifts)
    ds.speedup = oracle_ms / ds_ms
    oracle.speedup = ds_ms / oracle_ms
    return ds, oracle


def bench_csv(results):
    """CSV rows: method, stage, time_ms, speedup (speedup on the cost_volume row)."""
    buf = io.StringIO()
    buf.write("method,stage,time_ms,speedup\n")
    for res in results:
        for stage in STAGES:
            speed = f"{res.speedup:.3f}" if (stage == "cost_volume" and res.speedup) else ""
            buf.write(f"{res.method},{stage},{res.stage_ms[stage]:.4f},{speed}\n")
        buf.write(f"{res.method},total,{res.total_ms:.4f},\n")
    return buf.getvalue()
