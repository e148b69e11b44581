"""Benchmarks: per-frame supervision overhead and contour-kernel comparison."""

from __future__ import annotations

import time

import numpy as np

from . import _contour_py
from .mask import KERNEL_BACKEND, BinaryMask, extract_contours, _kernel
from .pipeline import Pipeline, PipelineConfig


def bench_contour_kernels(masks, repeats: int = 3) -> dict:
    """Time the active kernel against the pure-Python reference."""
    def run(kernel):
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            for m in masks:
                kernel.extract_contours_raw(m.data)
            best = min(best, (time.perf_counter() - t0) / max(len(masks), 1))
        return best * 1000

    out = {"active_kernel": KERNEL_BACKEND,
           "python_ms_per_mask": run(_contour_py)}
    if _kernel is not _contour_py:
        out["cython_ms_per_mask"] = run(_kernel)
        out["speedup"] = out["python_ms_per_mask"] / out["cython_ms_per_mask"]
    return out


def bench_pipeline(config: PipelineConfig) -> dict:
    """Run the scene and report supervisor + mask-analysis per-frame cost."""
    pipe = Pipeline(config)
    try:
        summary = pipe.run()
        masks = [pipe.scene.gt_mask(i)
                 for i in range(min(len(pipe.scene), 50))]
        report = {
            "frames": summary["frames"],
            "supervisor_mean_ms": summary["supervisor_mean_ms"],
            "kernels": bench_contour_kernels(masks),
        }
        if "metrics" in summary:
            report["metrics"] = summary["metrics"]
        return report
    finally:
        pipe.close()
