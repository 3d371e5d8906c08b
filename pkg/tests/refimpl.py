"""Independent reference implementations used as test oracles.

Everything here is written the slow, obvious way: plain Python loops,
struct-packed headers, nested lists. Nothing imports from avatarkit, so a
bug in the package cannot hide by being mirrored here. Where the package
pins an exact floating-point expression, the same expression appears here
character for character; IEEE 754 makes elementwise results identical, so
tests may demand equality rather than closeness.
"""

from __future__ import annotations

import hashlib
import math
import struct

SAMPLE_RATE = 16000


# --- sharpness score, brute force ---------------------------------------

def luma_grid(arr) -> list[list[float]]:
    """ITU-R 601 luma of an (H, W, 3) uint8 array as nested float lists."""
    h = len(arr)
    w = len(arr[0])
    out = []
    for r in range(h):
        row = []
        for c in range(w):
            red = float(arr[r][c][0])
            green = float(arr[r][c][1])
            blue = float(arr[r][c][2])
            row.append((0.299 * red + 0.587 * green) + 0.114 * blue)
        out.append(row)
    return out


def sobel_grid(lum: list[list[float]]) -> list[list[float]]:
    """Horizontal Sobel over kernel sum 8; zero on every border pixel."""
    h = len(lum)
    w = len(lum[0])
    out = [[0.0] * w for _ in range(h)]
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            right = (lum[r - 1][c + 1] + 2.0 * lum[r][c + 1]) + lum[r + 1][c + 1]
            left = (lum[r - 1][c - 1] + 2.0 * lum[r][c - 1]) + lum[r + 1][c - 1]
            out[r][c] = (right - left) / 8.0
    return out


def edge_width_walk(row: list[float], col: int, rising: bool) -> float:
    """Strictly monotone walk out to the flanking luma extrema."""
    left = col
    right = col
    last = len(row) - 1
    if rising:
        while left > 0 and row[left - 1] < row[left]:
            left -= 1
        while right < last and row[right + 1] > row[right]:
            right += 1
    else:
        while left > 0 and row[left - 1] > row[left]:
            left -= 1
        while right < last and row[right + 1] < row[right]:
            right += 1
    return float(right - left)


def cpbd_reference(arr) -> tuple[float, list[str]]:
    """Sharpness score of an (H, W, 3) uint8 array, plus flags.

    Steps: luma, Sobel, |g| > 20 edge mask, full 64x64 blocks with more
    than 0.2 percent edge pixels, per-pixel width walk, contrast-dependent
    just-noticeable width (5 when contrast <= 50 else 3), blur probability
    1 - exp(-(w / w_jnb) ** 3.6), sharp when <= 0.63.
    """
    lum = luma_grid(arr)
    grad = sobel_grid(lum)
    h = len(lum)
    w = len(lum[0])
    block = 64
    min_count = 0.002 * block * block

    sharp = 0
    total = 0
    for by in range(h // block):
        for bx in range(w // block):
            r0 = by * block
            c0 = bx * block
            edges = []
            for r in range(r0, r0 + block):
                for c in range(c0, c0 + block):
                    if abs(grad[r][c]) > 20.0:
                        edges.append((r, c))
            if len(edges) <= min_count:
                continue
            lo = min(lum[r][c] for r in range(r0, r0 + block) for c in range(c0, c0 + block))
            hi = max(lum[r][c] for r in range(r0, r0 + block) for c in range(c0, c0 + block))
            contrast = hi - lo
            w_jnb = 5.0 if contrast <= 50.0 else 3.0
            for r, c in edges:
                width = edge_width_walk(lum[r], c, grad[r][c] > 0.0)
                p_blur = 1.0 - math.exp(-((width / w_jnb) ** 3.6))
                total += 1
                if p_blur <= 0.63:
                    sharp += 1
    if total == 0:
        return 1.0, ["no-edges"]
    return sharp / total, []


# --- mock speech synthesis ----------------------------------------------

def tts_reference(text: str) -> list[int]:
    """Per-character sine prosody: 75 ms at 220 + (cp mod 26) * 20 Hz."""
    values = []
    for ch in text:
        freq = 220.0 + (ord(ch) % 26) * 20.0
        for i in range(1200):
            angle = 2.0 * math.pi * freq * i / SAMPLE_RATE
            values.append(int(round(0.3 * 32767.0 * math.sin(angle))))
    while len(values) < 3200:
        values.append(0)
    return values


def voiceprint_reference(values: list[int]) -> list[float]:
    """64 nearest-rank quantiles of non-overlapping 400-sample window RMS."""
    window = 400
    count = len(values) // window
    rms = []
    for k in range(count):
        acc = 0.0
        for s in values[k * window:(k + 1) * window]:
            x = s / 32767.0
            acc += x * x
        rms.append(math.sqrt(acc / window))
    rms.sort()
    out = []
    for k in range(64):
        idx = int(math.floor(k / 63 * (count - 1) + 0.5))
        out.append(rms[idx])
    return out


def clone_scale_reference(features: list[float]) -> float:
    mean = sum(features) / len(features)
    return min(1.5, max(0.5, mean / 0.3))


def scale_pcm_reference(values: list[int], scale: float) -> list[int]:
    out = []
    for v in values:
        y = int(round(scale * v))
        out.append(max(-32768, min(32767, y)))
    return out


def frame_count_reference(duration_seconds: float, fps: float) -> int:
    return max(1, int(math.floor(duration_seconds * fps + 0.5)))


# --- resampling ----------------------------------------------------------

def nn_resize_reference(arr, dst_w: int, dst_h: int) -> list:
    """Nearest neighbor with the floor index map src = (dst * n) // m."""
    src_h = len(arr)
    src_w = len(arr[0])
    out = []
    for y in range(dst_h):
        sy = (y * src_h) // dst_h
        row = []
        for x in range(dst_w):
            sx = (x * src_w) // dst_w
            row.append([int(v) for v in arr[sy][sx]])
        out.append(row)
    return out


def bilinear_reference(arr, scale: int) -> list:
    """Half-pixel-center bilinear upsample, rounding via floor(v + 0.5)."""
    src_h = len(arr)
    src_w = len(arr[0])
    if scale == 1:
        return [[[int(v) for v in px] for px in row] for row in arr]
    dst_h = src_h * scale
    dst_w = src_w * scale
    out = []
    for y in range(dst_h):
        sy = (y + 0.5) / scale - 0.5
        y0 = int(math.floor(sy))
        if y0 < 0:
            y0 = 0
        if y0 > src_h - 1:
            y0 = src_h - 1
        y1 = min(y0 + 1, src_h - 1)
        fy = sy - y0
        if fy < 0.0:
            fy = 0.0
        if fy > 1.0:
            fy = 1.0
        row = []
        for x in range(dst_w):
            sx = (x + 0.5) / scale - 0.5
            x0 = int(math.floor(sx))
            if x0 < 0:
                x0 = 0
            if x0 > src_w - 1:
                x0 = src_w - 1
            x1 = min(x0 + 1, src_w - 1)
            fx = sx - x0
            if fx < 0.0:
                fx = 0.0
            if fx > 1.0:
                fx = 1.0
            px = []
            for ch in range(3):
                p00 = float(arr[y0][x0][ch])
                p01 = float(arr[y0][x1][ch])
                p10 = float(arr[y1][x0][ch])
                p11 = float(arr[y1][x1][ch])
                v = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) + fy * ((1.0 - fx) * p10 + fx * p11)
                px.append(int(math.floor(v + 0.5)))
            row.append(px)
        out.append(row)
    return out


# --- containers ----------------------------------------------------------

def wav_reference(pcm: bytes) -> bytes:
    """Canonical RIFF/WAVE header for mono PCM16 at 16 kHz, hand packed."""
    byte_rate = SAMPLE_RATE * 2
    return struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, 1, 1, SAMPLE_RATE, byte_rate, 2, 16,
        b"data", len(pcm),
    ) + pcm


def frame_rms_reference(values: list[int], t: int, fps: float) -> float:
    start = min(len(values), int(math.floor(t * SAMPLE_RATE / fps)))
    end = min(len(values), int(math.floor((t + 1) * SAMPLE_RATE / fps)))
    if end <= start:
        return 0.0
    acc = 0.0
    for s in values[start:end]:
        x = s / 32767.0
        acc += x * x
    return math.sqrt(acc / (end - start))


# --- conversation and scoring -------------------------------------------

def history_reference(pairs: list[tuple[str, str]], new_text: str, cap: int) -> list[dict]:
    """Expected chat request body: new message first, then newest pairs."""
    messages = [{"role": "user", "text": new_text}]
    for user, reply in reversed(pairs[-cap:]):
        messages.append({"role": "pair", "user": user, "reply": reply})
    return messages


def normalize_reference(raw: float, lo: float, hi: float) -> float:
    return min(1.0, max(0.0, (raw - lo) / (hi - lo)))


def vqa_reference(metric: str, payload: bytes, lo: float, hi: float) -> float:
    digest = hashlib.sha256(metric.encode("utf-8") + b"\x00" + payload).digest()
    u = int.from_bytes(digest[:8], "big") / 2.0 ** 64
    return lo + (hi - lo) * u
