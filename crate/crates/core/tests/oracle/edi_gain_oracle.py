"""Independent reference pipeline for the translating-texture deblur gain.

Dense, microsecond-grid implementation in numpy: events are detected by
sampling the log-linear interpolated signal at every microsecond, and the
double integral is a rectangle rule on the same grid (exact for integer
event timestamps). The printed gain is frozen into the Rust acceptance test.

    python3 edi_gain_oracle.py
"""

import numpy as np

W, H = 96, 64
SPEED_PX_PER_S = 250.0
FRAME_US = 1000
EXPOSURE_US = 40000
T_MID = 20000
THETA = 0.2
LOG_FLOOR = 1e-3
GAMMA = 2.2


def texture(u, y):
    return (
        0.5
        + 0.25 * np.sin(2 * np.pi * u / 23.0 + 0.3)
        + 0.15 * np.sin(2 * np.pi * u / 7.3 + 1.1)
        + 0.05 * np.sin(2 * np.pi * y / 11.0 + 0.7)
    )


def frame(t_us):
    ys, xs = np.mgrid[0:H, 0:W].astype(np.float64)
    u = xs - SPEED_PX_PER_S * t_us * 1e-6
    return texture(u, ys)


def psnr_gamma(a, b):
    ga = np.clip(a, 0, 1) ** (1 / GAMMA)
    gb = np.clip(b, 0, 1) ** (1 / GAMMA)
    mse = np.mean((ga - gb) ** 2)
    return 10 * np.log10(1.0 / mse)


def main():
    n_frames = EXPOSURE_US // FRAME_US + 1
    frames = np.stack([frame(k * FRAME_US) for k in range(n_frames)])
    logs = np.log(np.maximum(frames, LOG_FLOOR)).reshape(n_frames, -1)

    a = T_MID - EXPOSURE_US // 2
    b = T_MID + EXPOSURE_US // 2
    ref = logs[0].copy()
    # running signed count since the window start; the cell [h, h+1) sees
    # every event with t <= h
    running = np.zeros(W * H)
    exp_sum = np.zeros(W * H)
    before_mid = None
    n_events = 0
    for h in range(0, b):
        k = h // FRAME_US
        s = (h - k * FRAME_US) / FRAME_US
        lh = (1 - s) * logs[k] + s * logs[k + 1]
        up = np.floor((lh - ref) / THETA + 1e-9)
        up = np.where(up > 0, up, 0)
        down = np.floor((ref - lh) / THETA + 1e-9)
        down = np.where(down > 0, down, 0)
        net = up - down
        ref += net * THETA
        if h == T_MID:
            before_mid = running.copy()
        if h >= a:
            running += net
            n_events += int((up + down).sum())
            exp_sum += np.exp(THETA * running)
    kernel = (np.exp(-THETA * before_mid) * exp_sum / (b - a)).reshape(H, W)

    blur = frames[: EXPOSURE_US // FRAME_US].mean(axis=0)
    sharp = frame(T_MID)
    latent = blur / kernel

    p_blur = psnr_gamma(blur, sharp)
    p_edi = psnr_gamma(latent, sharp)
    print(f"events={n_events}")
    print(f"psnr_blur={p_blur:.4f}")
    print(f"psnr_edi={p_edi:.4f}")
    print(f"gain={p_edi - p_blur:.4f}")


if __name__ == "__main__":
    main()
