"""On-disk formats.

Binary containers are little-endian: an 8-byte magic (``V2VCTF1``/``V2VCIR1``
NUL-padded), integer and float header fields as 64-bit values, then the
samples as interleaved float32 (real, imag) pairs in row-major order.

CTF header: S, N (int64); t_s, f_s, carrier_freq (float64).
CIR header: S, N_c, Q, start_index, n_source (int64); t_s, f_s, carrier_freq
(float64); then Q sub-band indices (int64) and the S x N_c x Q samples.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .kfactor import KFactorField
from .subband import SubbandCir
from .synth import ChannelTransferFunction

CTF_MAGIC = b"V2VCTF1\x00"
CIR_MAGIC = b"V2VCIR1\x00"
_CTF_HEADER = struct.Struct("<8sqqddd")
_CIR_HEADER = struct.Struct("<8sqqqqqddd")
_SAMPLE = np.dtype("<c8")

KFIELD_COLUMNS = ("window_center_time_s", "subband_q", "subband_center_freq_hz", "k_db", "valid")


def _fmt(x) -> str:
    return repr(float(x))


# -- binary containers -------------------------------------------------------

def write_ctf(path, ctf: ChannelTransferFunction) -> None:
    with open(path, "wb") as f:
        f.write(_CTF_HEADER.pack(CTF_MAGIC, ctf.S, ctf.N, ctf.t_s, ctf.f_s, ctf.carrier_freq))
        np.ascontiguousarray(ctf.samples, dtype=_SAMPLE).tofile(f)


def _read_header(f, header: struct.Struct, magic: bytes, what: str):
    raw = f.read(header.size)
    if len(raw) < header.size:
        raise FormatError(f"{what}: file too short for header")
    fields = header.unpack(raw)
    if fields[0] != magic:
        raise FormatError(f"{what}: bad magic {fields[0]!r}")
    return fields[1:]


def read_ctf(path) -> ChannelTransferFunction:
    with open(path, "rb") as f:
        S, N, t_s, f_s, fc = _read_header(f, _CTF_HEADER, CTF_MAGIC, str(path))
        if S < 0 or N < 0:
            raise FormatError(f"{path}: negative shape in header")
        data = np.fromfile(f, dtype=_SAMPLE)
    if data.size != S * N:
        raise FormatError(f"{path}: expected {S * N} samples, found {data.size}")
    try:
        return ChannelTransferFunction(data.reshape(S, N), t_s=t_s, f_s=f_s, carrier_freq=fc)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_cir(path, cir: SubbandCir) -> None:
    with open(path, "wb") as f:
        f.write(_CIR_HEADER.pack(CIR_MAGIC, cir.S, cir.N_c, cir.Q, cir.start_index, cir.n_source,
                                 cir.t_s, cir.f_s, cir.carrier_freq))
        np.asarray(cir.q_index, dtype="<i8").tofile(f)
        np.ascontiguousarray(cir.h, dtype=_SAMPLE).tofile(f)


def read_cir(path) -> SubbandCir:
    with open(path, "rb") as f:
        S, n_c, q, start, n_src, t_s, f_s, fc = _read_header(f, _CIR_HEADER, CIR_MAGIC, str(path))
        if min(S, n_c, q) < 0:
            raise FormatError(f"{path}: negative shape in header")
        q_index = np.fromfile(f, dtype="<i8", count=q)
        if q_index.size != q:
            raise FormatError(f"{path}: truncated sub-band index table")
        data = np.fromfile(f, dtype=_SAMPLE)
    if data.size != S * n_c * q:
        raise FormatError(f"{path}: expected {S * n_c * q} samples, found {data.size}")
    return SubbandCir(data.reshape(S, n_c, q), t_s=t_s, f_s=f_s, carrier_freq=fc, n_source=n_src,
                      start_index=start, q_index=q_index.astype(np.int64))


def ctf_to_csv(ctf: ChannelTransferFunction, path) -> None:
    """Long-format CSV (m, b, re, im); meant for small instances."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(("m", "b", "re", "im"))
        for m in range(ctf.S):
            for b in range(ctf.N):
                v = ctf.samples[m, b]
                wr.writerow((m, b, _fmt(v.real), _fmt(v.imag)))


def cir_abs_to_csv(cir: SubbandCir, path) -> None:
    """Long-format CSV of |h| with absolute time index."""
    mag = np.abs(cir.h)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(("m", "n", "q", "abs_h"))
        for i in range(cir.S):
            for n in range(cir.N_c):
                for j, q in enumerate(cir.q_index):
                    wr.writerow((cir.start_index + i, n, int(q), _fmt(mag[i, n, j])))


# -- K fields ----------------------------------------------------------------

def kfield_columns(field: KFactorField) -> dict:
    nw, nq = field.k_db.shape
    return {
        "window_center_time_s": np.repeat(field.center_times, nq),
        "subband_q": np.tile(field.q_index, nw),
        "subband_center_freq_hz": np.tile(field.subband_freqs, nw),
        "k_db": field.k_db.ravel(),
        "valid": field.valid.ravel(),
    }


def write_kfield_columns(path, cols: dict) -> None:
    n = len(cols["k_db"])
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(KFIELD_COLUMNS)
        for i in range(n):
            wr.writerow((
                _fmt(cols["window_center_time_s"][i]),
                int(cols["subband_q"][i]),
                _fmt(cols["subband_center_freq_hz"][i]),
                _fmt(cols["k_db"][i]),
                int(bool(cols["valid"][i])),
            ))


def write_kfield_csv(path, field: KFactorField) -> None:
    write_kfield_columns(path, kfield_columns(field))


def read_kfield_csv(path) -> dict:
    """Columns of a K-field CSV as numpy arrays."""
    try:
        with open(path, newline="") as f:
            rd = csv.reader(f)
            header = next(rd, None)
            if header is None or tuple(header) != KFIELD_COLUMNS:
                raise FormatError(f"{path}: unexpected header {header}")
            rows = list(rd)
        t = np.array([float(r[0]) for r in rows])
        q = np.array([int(r[1]) for r in rows], dtype=np.int64)
        fr = np.array([float(r[2]) for r in rows])
        k = np.array([float(r[3]) for r in rows])
        v = np.array([r[4] == "1" for r in rows], dtype=bool)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed row ({exc})") from exc
    return {"window_center_time_s": t, "subband_q": q, "subband_center_freq_hz": fr, "k_db": k, "valid": v}


# -- JSON --------------------------------------------------------------------

def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_xy_csv(path, header, *columns) -> None:
    """Plain numeric CSV for plot data."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(header)
        for row in zip(*columns):
            wr.writerow(tuple(x if isinstance(x, (int, np.integer, str)) else _fmt(x) for x in row))
