"""Write small WAV fixtures plus the amplitudes a reference decoder reports.

    python tools/make_wav_fixtures.py tests/data

scipy.io.wavfile reads the integer samples; they are scaled by the signed
maximum of the bit depth (128, 32768, 8388608, 2147483648).
"""
import json
import os
import struct
import sys
import wave

import numpy as np
from scipy.io import wavfile


def pcm_file(path, width, channels, rate, frames):
    with wave.open(path, "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(frames)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "tests/data"
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(7)
    expected = {}

    # 16-bit stereo, including both extremes.
    s16 = np.array([[32767, -32768], [0, 1], [-1, 16384], [12345, -23456]], dtype="<i2")
    s16 = np.concatenate([s16, rng.integers(-32768, 32768, size=(60, 2), dtype="<i2")])
    pcm_file(os.path.join(out, "pcm16_stereo.wav"), 2, 2, 44100, s16.tobytes())

    # 8-bit unsigned mono.
    u8 = np.concatenate([np.array([0, 128, 255, 1], dtype=np.uint8), rng.integers(0, 256, 40, dtype=np.uint8)])
    pcm_file(os.path.join(out, "pcm8_mono.wav"), 1, 1, 8000, u8.tobytes())

    # 24-bit mono.
    v24 = np.concatenate([np.array([8388607, -8388608, 0, -1]), rng.integers(-8388608, 8388608, 40)])
    raw24 = b"".join(struct.pack("<i", int(v))[:3] for v in v24)
    pcm_file(os.path.join(out, "pcm24_mono.wav"), 3, 1, 48000, raw24)

    # float32 mono.
    f32 = np.concatenate([np.array([1.0, -1.0, 0.25], dtype=np.float32),
                          rng.uniform(-1, 1, 40).astype(np.float32)])
    wavfile.write(os.path.join(out, "float32_mono.wav"), 22050, f32)

    for name, scale in [("pcm16_stereo.wav", 32768.0), ("pcm8_mono.wav", None),
                        ("pcm24_mono.wav", None), ("float32_mono.wav", 1.0)]:
        rate, data = wavfile.read(os.path.join(out, name))
        if data.dtype == np.uint8:
            values = (data.astype(np.float64) - 128.0) / 128.0
        elif name == "pcm24_mono.wav":
            # scipy returns 24-bit data left-aligned in int32.
            values = (data.astype(np.int64) >> 8).astype(np.float64) / 8388608.0
        else:
            values = data.astype(np.float64) / scale
        channels = 1 if values.ndim == 1 else values.shape[1]
        expected[name] = {"sample_rate": int(rate), "channels": channels,
                          "samples": [float(v) for v in values.reshape(-1)]}

    # Header-only file: a data chunk of length zero.
    pcm_file(os.path.join(out, "empty.wav"), 2, 1, 22050, b"")

    with open(os.path.join(out, "wav_expected.json"), "w") as f:
        json.dump(expected, f)


if __name__ == "__main__":
    main()
