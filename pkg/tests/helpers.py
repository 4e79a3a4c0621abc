import numpy as np


def relative_error(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def probe_gradient_check(forward, backward, x, rng, step=1e-4):
    """Compare backward(u) with finite differences of <u, forward(x)> for a random probe u."""
    from srab.tensor import finite_diff_gradient

    u = rng.standard_normal(forward(x).shape)
    numeric = finite_diff_gradient(lambda z: float(np.sum(u * forward(z))), x, step)
    return relative_error(backward(x, u), numeric)


def keys_scalar(t, a=-0.5):
    # written out independently of the vectorised kernel under test
    t = abs(t)
    if t <= 1:
        return (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1
    if t < 2:
        return a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a
    return 0.0


def resize_1d_bruteforce(row, n_out):
    n_in = len(row)
    out = []
    for i in range(n_out):
        src = (i + 0.5) * n_in / n_out - 0.5
        acc = 0.0
        for j in range(int(np.floor(src)) - 3, int(np.floor(src)) + 4):
            acc += keys_scalar(src - j) * row[min(max(j, 0), n_in - 1)]
        out.append(acc)
    return np.array(out)


def dense_bicubic(h, w, scale=4):
    """Dense (C*sH*sW, C*H*W) matrix of the 3-channel bicubic upscaler, built column by column."""
    eye_h, eye_w = np.eye(h), np.eye(w)
    rh = np.stack([resize_1d_bruteforce(eye_h[:, j], scale * h) for j in range(h)], axis=1)
    rw = np.stack([resize_1d_bruteforce(eye_w[:, j], scale * w) for j in range(w)], axis=1)
    return np.kron(np.eye(3), np.kron(rh, rw))
