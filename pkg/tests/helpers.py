"""Shared test utilities: raw WAV writers and acceptance-line bookkeeping."""
import struct

import numpy as np

ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {title} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _riff(fmt_tag, channels, rate, bits, payload, extensible=False):
    block = channels * bits // 8
    if extensible:
        fmt = struct.pack("<HHIIHH", 0xFFFE, channels, rate, rate * block, block, bits)
        fmt += struct.pack("<HHI", 22, bits, 0) + struct.pack("<H", fmt_tag) + bytes(14)
    else:
        fmt = struct.pack("<HHIIHH", fmt_tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\0"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_pcm16(path, frames, rate=16000, extensible=False):
    """``frames``: int array of shape (n,) or (n, channels)."""
    a = np.asarray(frames, dtype="<i2")
    ch = 1 if a.ndim == 1 else a.shape[1]
    path.write_bytes(_riff(1, ch, rate, 16, a.tobytes(), extensible))


def write_pcm24(path, frames, rate=48000):
    a = np.asarray(frames, dtype=np.int64)
    ch = 1 if a.ndim == 1 else a.shape[1]
    u = (a.reshape(-1) & 0xFFFFFF).astype("<u4")
    payload = u.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    path.write_bytes(_riff(1, ch, rate, 24, payload))


def write_float32(path, frames, rate=16000):
    a = np.asarray(frames, dtype="<f4")
    ch = 1 if a.ndim == 1 else a.shape[1]
    path.write_bytes(_riff(3, ch, rate, 32, a.tobytes()))


def write_raw(path, fmt_tag, channels, rate, bits, payload):
    path.write_bytes(_riff(fmt_tag, channels, rate, bits, payload))


def dominant_hz(x, rate):
    x = np.asarray(x, float)
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    return np.argmax(spec) * rate / len(x)
