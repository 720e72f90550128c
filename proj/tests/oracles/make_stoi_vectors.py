#!/usr/bin/env python3
"""Writes STOI reference vectors computed with pystoi.

Each case is a 16 kHz 16-bit reference/estimate WAV pair plus the score
pystoi assigns to the quantized samples. Output goes to tests/data/stoi.
"""
import pathlib

import numpy as np
from pystoi import stoi
from scipy.io import wavfile
from scipy.signal import butter, lfilter

FS = 16000
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "stoi"


def speechlike(rng, seconds):
    n = int(seconds * FS)
    t = np.arange(n) / FS
    f0 = 120 + 30 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / FS
    x = sum(np.sin(k * phase) / k for k in range(1, 25))
    syllables = 0.5 * (1 + np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi)))
    x = x * syllables ** 2 + 0.05 * rng.standard_normal(n) * syllables
    return 0.3 * x / np.max(np.abs(x))


def at_snr(clean, noise, snr_db):
    gain = np.sqrt(np.mean(clean ** 2) / (np.mean(noise ** 2) * 10 ** (snr_db / 10)))
    return clean + gain * noise


def quantize(x):
    return np.clip(np.round(np.clip(x, -1, 1) * 32768), -32768, 32767).astype(np.int16)


def cases(rng):
    ref = speechlike(rng, 3.0)
    n = len(ref)
    white = rng.standard_normal(n)
    babble = sum(np.roll(speechlike(rng, 3.0), rng.integers(n)) for _ in range(4))
    gapped = ref.copy()
    gapped[int(0.8 * FS):int(1.4 * FS)] = 0.0
    b, a = butter(4, 1000 / (FS / 2))
    yield "identical", ref, ref
    yield "white_0db", ref, at_snr(ref, white, 0)
    yield "white_m5db", ref, at_snr(ref, white, -5)
    yield "babble_5db", ref, at_snr(ref, babble, 5)
    yield "gapped_white_3db", gapped, at_snr(gapped, white, 3)
    yield "lowpass_1k", ref, lfilter(b, a, ref)
    yield "scaled_white_10db", ref, 0.25 * at_snr(ref, white, 10)
    yield "unrelated", ref, 0.3 * speechlike(rng, 3.0)
    short = ref[: int(1.0 * FS)]
    yield "short_white_5db", short, at_snr(short, white[: len(short)], 5)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240611)
    lines = ["# name ref est stoi (pystoi, extended=False, on the quantized samples)"]
    for name, ref, est in cases(rng):
        r, e = quantize(ref), quantize(est)
        wavfile.write(OUT / f"{name}_ref.wav", FS, r)
        wavfile.write(OUT / f"{name}_est.wav", FS, e)
        score = stoi(r / 32768.0, e / 32768.0, FS, extended=False)
        lines.append(f"{name} {name}_ref.wav {name}_est.wav {score:.10f}")
    (OUT / "expected.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
