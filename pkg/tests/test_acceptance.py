"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the summary lines appear at
the end of the session) or ``python tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import rician_samples  # noqa: E402
from v2vkfactor import io  # noqa: E402
from v2vkfactor.cli import main  # noqa: E402
from v2vkfactor.fitting import EmpiricalCdf, fit_bimodal_gmm, fit_rayleigh, fit_rician, fit_weibull, ks_gof, rayleigh_cdf  # noqa: E402
from v2vkfactor.kfactor import NEAR_ZERO_DB, estimate_k_mom  # noqa: E402
from v2vkfactor.scenarios import builtin_profiles, sample_k_values  # noqa: E402
from v2vkfactor.subband import SubbandCir, hanning_window, local_power, remove_large_scale, subband_transform  # noqa: E402
from v2vkfactor.synth import ChannelTransferFunction  # noqa: E402

# Tolerances, fixed before any measurement.
GMM_N = 10_000
GMM_W_TOL = 0.05
GMM_DB_TOL = 0.5
GMM_EPS = 0.06
GMM_TIME_S = 10.0

PIPE_SCENARIO = "general LOS obstruction"
PIPE_DURATION_S = 20.0
PIPE_SEED = 0
PIPE_MEDIAN_ERR_DB = 1.0
PIPE_LOW_K_DB = -20.0
PIPE_TIME_S = 60.0

CAL_S_K = 630
CAL_TRIALS = 200
CAL_K_DB = (0, 5, 10, 15, 20)
CAL_BIAS_DB = 0.5
CAL_STD_DB = 1.5

ENV_EPS = 0.04
WEIBULL_RAYLEIGH = (1.85, 2.15)
WEIBULL_RICIAN_MIN = 2.5
WEIBULL_RICIAN_K_DB = 5.0

NORM_TOL = 1e-6
PARSEVAL_TOL = 1e-10
INVARIANCE_TOL = 1e-12

RESULTS: dict[int, str] = {}


def _report(n, title, passed, detail):
    line = f"ACCEPTANCE {n} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    RESULTS[n] = line
    print(line)
    assert passed, line


# -- 1. mixture round trip ---------------------------------------------------

def test_criterion_1_gmm_round_trip():
    t0 = time.perf_counter()
    failures, worst_eps = [], 0.0
    for i, prof in enumerate(builtin_profiles()):
        rng = np.random.default_rng(np.random.SeedSequence(0, spawn_key=(i,)))
        fit = fit_bimodal_gmm(sample_k_values(prof.gmm, GMM_N, rng))
        ref, got = prof.gmm, fit.params
        deltas = {
            "w": (got.w - ref.w, GMM_W_TOL),
            "mu1": (got.mu1 - ref.mu1, GMM_DB_TOL),
            "sigma1": (got.sigma1 - ref.sigma1, GMM_DB_TOL),
            "mu2": (got.mu2 - ref.mu2, GMM_DB_TOL),
            "sigma2": (got.sigma2 - ref.sigma2, GMM_DB_TOL),
        }
        bad = {k: d for k, (d, tol) in deltas.items() if abs(d) > tol}
        worst_eps = max(worst_eps, fit.epsilon)
        if fit.epsilon >= GMM_EPS:
            bad["epsilon"] = fit.epsilon
        print(f"  {prof.name:46s} " + " ".join(f"d{k}={d:+.3f}" for k, (d, _) in deltas.items())
              + f" eps={fit.epsilon:.4f} {'ok' if not bad else 'out of tolerance'}")
        if bad:
            failures.append(f"{prof.name} ({', '.join(f'{k} {v:+.2f}' for k, v in bad.items())})")
    elapsed = time.perf_counter() - t0
    passed = not failures and elapsed < GMM_TIME_S
    detail = f"{10 - len(failures)}/10 scenarios within tolerance, max eps {worst_eps:.4f}, {elapsed:.2f} s"
    if failures:
        detail += "; out of tolerance: " + "; ".join(failures)
    _report(1, "GMM round trip", passed, detail)


# -- 2. full pipeline round trip ---------------------------------------------

@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance_pipeline")
    t0 = time.perf_counter()
    assert main(["synth", "--scenario", PIPE_SCENARIO, "--duration-s", str(PIPE_DURATION_S),
                 "--seed", str(PIPE_SEED), "--name", "run", "--out-dir", str(out)]) == 0
    assert main(["process", str(out / "run.ctf"), "--out-dir", str(out)]) == 0
    elapsed = time.perf_counter() - t0
    meta = io.read_json(out / "run.json")
    return out, meta, elapsed


def _block_truth(meta, abs_index):
    blocks = np.asarray(meta["k_blocks_db"], dtype=float)
    return blocks[np.asarray(abs_index) // meta["k_block_length"]]


def test_criterion_2_pipeline_round_trip(pipeline_run):
    out, meta, elapsed = pipeline_run
    s_k = meta["profile"]["s_k"]
    cols = io.read_kfield_csv(out / "run_kfield.csv")
    centers = np.rint(cols["window_center_time_s"] / 307.2e-6).astype(np.int64)
    starts = centers - s_k // 2
    aligned = starts % s_k == 0
    truth = _block_truth(meta, starts)
    k, valid = cols["k_db"], cols["valid"]

    band = aligned & (truth >= 0) & (truth <= 20)
    err = np.abs(k[band] - truth[band])
    med = float(np.median(err)) if band.any() else np.inf
    low = aligned & (truth < PIPE_LOW_K_DB)
    near_zero = ~valid | (k < NEAR_ZERO_DB)
    low_flagged = bool(np.all(near_zero[low]))
    n_low_blocks = len(np.unique(starts[low]))
    passed = med < PIPE_MEDIAN_ERR_DB and low_flagged and elapsed < PIPE_TIME_S and band.any()
    _report(2, "pipeline round trip", passed,
            f"median |err| {med:.3f} dB over {band.sum()} window-subband pairs with true K in [0, 20] dB; "
            f"{n_low_blocks} block(s) below {PIPE_LOW_K_DB:.0f} dB, all flagged: {low_flagged}; "
            f"synth+process {elapsed:.1f} s")


# -- 3. estimator calibration ------------------------------------------------

def test_criterion_3_estimator_calibration():
    rows, passed = [], True
    for k_db in CAL_K_DB:
        rng = np.random.default_rng(np.random.SeedSequence(3, spawn_key=(k_db,)))
        est = [estimate_k_mom(rician_samples(rng, CAL_S_K, k_db, phase=rng.uniform(0, 2 * np.pi)))
               for _ in range(CAL_TRIALS)]
        k = np.array([e.k_db for e in est if e.valid])
        bias, std = float(k.mean() - k_db), float(k.std(ddof=1))
        n_invalid = CAL_TRIALS - len(k)
        passed &= abs(bias) < CAL_BIAS_DB and std < CAL_STD_DB
        rows.append(f"K={k_db} dB bias {bias:+.3f} sd {std:.3f} invalid {n_invalid}")
    _report(3, "MoM calibration at 630 samples", passed, "; ".join(rows))


# -- 4. envelope identification ----------------------------------------------

def test_criterion_4_envelope_identification(pipeline_run):
    out, meta, _ = pipeline_run
    cir = io.read_cir(out / "run.cir")
    s_k = meta["profile"]["s_k"]
    taps = meta["tap_bins"]
    first = -(-cir.start_index // s_k) * s_k
    block_starts = np.arange(first, cir.start_index + cir.S - s_k + 1, s_k)
    truth = _block_truth(meta, block_starts)

    # Tap 0: Rician KS per block-aligned window, averaged over time per sub-band.
    eps_ric = np.empty((len(block_starts), cir.Q))
    k0_min = np.inf
    for i, a in enumerate(block_starts):
        seg = np.abs(cir.h[a - cir.start_index: a - cir.start_index + s_k, taps[0], :]).astype(float)
        for j in range(cir.Q):
            z = seg[:, j]
            eps_ric[i, j] = ks_gof(EmpiricalCdf(z), fit_rician(z).cdf)
            if truth[i] > WEIBULL_RICIAN_K_DB:
                k0_min = min(k0_min, fit_weibull(z).k)
    mean_eps_ric = eps_ric.mean(axis=0)

    # Taps 1..4: pooled over the whole run per sub-band.
    eps_ray = np.empty((len(taps) - 1, cir.Q))
    k_tail = np.empty((len(taps) - 1, cir.Q))
    for t, b in enumerate(taps[1:]):
        for j in range(cir.Q):
            z = np.abs(cir.h[:, b, j]).astype(float)
            sigma = fit_rayleigh(z)
            eps_ray[t, j] = ks_gof(EmpiricalCdf(z), lambda v: rayleigh_cdf(v, sigma))
            k_tail[t, j] = fit_weibull(z).k

    checks = {
        "tap0 Rician": bool(np.all(mean_eps_ric < ENV_EPS)),
        "taps1-4 Rayleigh": bool(np.all(eps_ray < ENV_EPS)),
        "taps1-4 Weibull k": bool(np.all((k_tail >= WEIBULL_RAYLEIGH[0]) & (k_tail <= WEIBULL_RAYLEIGH[1]))),
        "tap0 Weibull k": bool(k0_min > WEIBULL_RICIAN_MIN),
    }
    _report(4, "envelope identification", all(checks.values()),
            f"tap0 mean Rician eps max over sub-bands {mean_eps_ric.max():.4f}; "
            f"taps1-4 Rayleigh eps max {eps_ray.max():.4f}; "
            f"taps1-4 Weibull k in [{k_tail.min():.3f}, {k_tail.max():.3f}]; "
            f"tap0 Weibull k min {k0_min:.3f} over {int(np.sum(truth > WEIBULL_RICIAN_K_DB))} blocks with K > 5 dB; "
            + ", ".join(f"{k}: {'ok' if v else 'fail'}" for k, v in checks.items()))


# -- 5. invariants -------------------------------------------------------------

def test_criterion_5_invariants():
    rng = np.random.default_rng(5)

    S, s_ls = 3000, 730
    h = rng.standard_normal((S, 33, 24)) + 1j * rng.standard_normal((S, 33, 24))
    h *= np.sqrt(2.5 / np.sum(np.abs(h) ** 2, axis=1, keepdims=True))
    norm_err = float(np.max(np.abs(local_power(remove_large_scale(SubbandCir(h), s_ls), s_ls) - 1.0)))

    H = rng.standard_normal((50, 769)) + 1j * rng.standard_normal((50, 769))
    cir = subband_transform(ChannelTransferFunction(H))
    w = hanning_window(33)
    e_freq = np.stack([np.sum(np.abs(H[:, q * 32:q * 32 + 33] * w) ** 2, axis=1) for q in range(24)], axis=1)
    parseval_err = float(np.max(np.abs(cir.power() - e_freq) / e_freq))

    inv_err = 0.0
    for _ in range(200):
        x = rician_samples(rng, 630, rng.uniform(0, 20))
        base = estimate_k_mom(x)
        c = 10 ** rng.uniform(-3, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        for y in (c * x, np.exp(1j * np.angle(c)) * x):
            inv_err = max(inv_err, abs(estimate_k_mom(y).k_linear - base.k_linear) / base.k_linear)

    passed = norm_err < NORM_TOL and parseval_err < PARSEVAL_TOL and inv_err < INVARIANCE_TOL
    _report(5, "normalization, Parseval and invariance", passed,
            f"normalization {norm_err:.2e} (< {NORM_TOL:g}); Parseval {parseval_err:.2e} (< {PARSEVAL_TOL:g}); "
            f"scale/phase {inv_err:.2e} (< {INVARIANCE_TOL:g})")


# -- 6. determinism ------------------------------------------------------------

def test_criterion_6_determinism(tmp_path, monkeypatch):
    snapshots = []
    for run, threads in enumerate(("1", "4", "4")):
        d = tmp_path / f"run{run}"
        monkeypatch.setenv("V2V_THREADS", threads)
        assert main(["synth", "--scenario", PIPE_SCENARIO, "--duration-s", "3", "--seed", "6",
                     "--name", "det", "--out-dir", str(d)]) == 0
        assert main(["process", str(d / "det.ctf"), "--out-dir", str(d)]) == 0
        assert main(["fit", str(d / "det_kfield.csv"), "--scenario", PIPE_SCENARIO, "--name", "det",
                     "--out-dir", str(d)]) == 0
        snapshots.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    same = snapshots[0] == snapshots[1] == snapshots[2]
    _report(6, "determinism", same,
            f"{len(snapshots[0])} artifacts byte-identical across runs with V2V_THREADS=1,4,4: {same}")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    sys.exit(code)
