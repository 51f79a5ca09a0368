#!/usr/bin/env python3
"""Regenerates the demo fixture videos under fixtures/videos.

vid001: 35 s of 8 kHz 16-bit mono "speech-like" audio (two chunks after
        standardization) with Sinhala metadata.
vid002: 20 s of 16 kHz audio whose title matches what the echo stub
        transcribes ("chunk-0"), used to reach the 100/100 rating.
"""
import json
import pathlib
import wave

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "videos"


def write_wav(path, samples, rate):
    pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())


def babble(seconds, rate, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * rate)) / rate
    f0 = 140.0 + 30.0 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / rate
    voiced = sum(np.sin(k * phase) / k for k in range(1, 6))
    envelope = 0.5 * (1 + np.sin(2 * np.pi * 3.0 * t)) ** 2 / 4
    return 0.25 * voiced * envelope + 0.01 * rng.standard_normal(t.size)


def main():
    ROOT.mkdir(parents=True, exist_ok=True)
    write_wav(ROOT / "vid001.wav", babble(35, 8000, 1), 8000)
    (ROOT / "vid001.json").write_text(
        json.dumps(
            {
                "video_id": "vid001",
                "title": "ප්‍රවෘත්ති විකාශය News bulletin",
                "description": "අද දින ප්‍රධාන ප්‍රවෘත්ති. Today's headlines.",
                "duration_seconds": 35,
                "view_count": 1200,
                "like_count": 85,
            },
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    write_wav(ROOT / "vid002.wav", babble(20, 16000, 2), 16000)
    (ROOT / "vid002.json").write_text(
        json.dumps(
            {"video_id": "vid002", "title": "chunk-0", "description": "", "duration_seconds": 20},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )


if __name__ == "__main__":
    main()
