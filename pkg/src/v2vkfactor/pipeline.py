"""End-to-end processing of a transfer function into a K field.

Sub-bands are independent, so they are processed one at a time (optionally
on a thread pool); results do not depend on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fitting import fit_rayleigh, fit_rician, fit_weibull, ks_gof, rayleigh_cdf, weibull_linearize, EmpiricalCdf
from .kfactor import KFactorField, sliding_k
from .scenarios import N_C, Q
from .subband import AlignmentReport, SubbandCir, align_first_tap, remove_large_scale, subband_transform
from .synth import ChannelTransferFunction

# Default time instants (s) for the per-tap envelope report.
REPORT_TIMES = (0.1, 4.8, 9.8)


@dataclass
class ProcessResult:
    cir: SubbandCir | None
    field: KFactorField
    alignment: AlignmentReport


def _process_one(ctf, qq, n_c, q, s_k, s_ls, stride, tap, keep_cir, cir_dtype):
    cir = subband_transform(ctf, n_c, q, subbands=[qq])
    cir, report = align_first_tap(cir, s_ls)
    cir = remove_large_scale(cir, s_ls)
    field = sliding_k(cir, tap, s_k, stride)
    h = cir.h[:, :, 0].astype(cir_dtype) if keep_cir else None
    return h, field, report.shifts[:, 0], cir


def process_ctf(ctf: ChannelTransferFunction, s_k: int, s_ls: int, n_c: int = N_C, q: int = Q,
                stride: int | None = None, tap: int = 0, threads: int = 1, keep_cir: bool = True,
                cir_dtype=np.complex64) -> ProcessResult:
    """Sub-band transform, alignment, large-scale removal and sliding K for every sub-band."""
    if s_ls <= s_k:
        raise ValueError("s_ls must exceed s_k")
    need = q * (n_c - 1) + 1
    if ctf.N < need:
        raise ValueError(f"CTF has {ctf.N} bins; {q} sub-bands of {n_c} need {need}")

    def work(qq):
        return _process_one(ctf, qq, n_c, q, s_k, s_ls, stride, tap, keep_cir, cir_dtype)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, range(q)))
    else:
        results = [work(qq) for qq in range(q)]

    first = results[0][3]
    fields = [r[1] for r in results]
    field = KFactorField(
        k_db=np.column_stack([f.k_db[:, 0] for f in fields]),
        valid=np.column_stack([f.valid[:, 0] for f in fields]),
        centers=fields[0].centers,
        window=s_k,
        stride=fields[0].stride,
        t_s=ctf.t_s,
        q_index=np.arange(q),
        subband_freqs=np.concatenate([f.subband_freqs for f in fields]),
        tap=tap,
    )
    alignment = AlignmentReport(np.column_stack([r[2] for r in results]), s_ls)
    cir = None
    if keep_cir:
        h = np.empty((first.S, n_c, q), dtype=cir_dtype)
        for j, r in enumerate(results):
            h[:, :, j] = r[0]
        cir = SubbandCir(h, t_s=first.t_s, f_s=first.f_s, carrier_freq=first.carrier_freq,
                         n_source=first.n_source, start_index=first.start_index, q_index=np.arange(q))
    return ProcessResult(cir, field, alignment)


def envelope_report(cir: SubbandCir, taps, s_k: int, subband: int, times=REPORT_TIMES):
    """Per-tap envelope fits on ``s_k``-sample windows centred near ``times``.

    Times whose window does not fit inside the data are skipped; if none
    fits, the central window is used instead. Returns ``(records, plot_rows)``: one dict per (time, tap) with KS
    distances for Rayleigh, Rician and Weibull fits, and Weibull-plot points
    as (time, tap, x, y) tuples.
    """
    j = int(np.flatnonzero(cir.q_index == subband)[0])
    half = s_k // 2
    lo_c, hi_c = cir.start_index + half, cir.start_index + cir.S - s_k + half
    centres = [c for c in (int(round(t / cir.t_s)) for t in times) if lo_c <= c <= hi_c]
    if not centres and lo_c <= hi_c:
        centres = [(lo_c + hi_c) // 2]
    records, plot_rows = [], []
    for centre in centres:
        a = centre - half - cir.start_index
        for tap in taps:
            z = np.abs(cir.h[a : a + s_k, tap, j]).astype(float)
            emp = EmpiricalCdf(z)
            sigma = fit_rayleigh(z)
            ric = fit_rician(z)
            wb = fit_weibull(z)
            records.append({
                "time_s": float(centre * cir.t_s),
                "tap_bin": int(tap),
                "subband_q": int(subband),
                "rayleigh": {"sigma": sigma, "epsilon": ks_gof(emp, lambda v: rayleigh_cdf(v, sigma))},
                "rician": {"k_db": ric.k_db, "valid": ric.valid, "epsilon": ks_gof(emp, ric.cdf)},
                "weibull": {"k": wb.k, "lam": wb.lam, "r2": wb.r2, "epsilon": ks_gof(emp, wb.cdf)},
            })
            plot = weibull_linearize(emp)
            plot_rows.extend((float(centre * cir.t_s), int(tap), x, y) for x, y in zip(plot.x, plot.y))
    return records, plot_rows
