"""Build the tiny-MLP fixture used by `xbar demo-mlp`.

Trains a 64-32-10 ReLU MLP on the scikit-learn digits set, folds the
biases into an extra constant input row per layer, and quantizes to 4-bit
signed weights and 4-bit unsigned activations. Writes layer1.xbw,
layer2.xbw, samples.csv and mlp.json into the output directory.

    python3 scripts/make_mlp_fixture.py fixtures/tiny_mlp
"""

import json
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split
from sklearn.neural_network import MLPClassifier

SEED = 7
HIDDEN = 32
ACT_MAX = 15
W_MAX = 7
N_SAMPLES = 200


def quantize(w):
    scale = W_MAX / np.abs(w).max()
    return np.clip(np.round(w * scale), -8, 7).astype(np.int64)


def forward(x, w1, w2, shift):
    h = x @ w1
    hq = np.clip(h >> shift, 0, ACT_MAX)
    hq = np.hstack([hq, np.full((len(hq), 1), ACT_MAX)])
    return np.argmax(hq @ w2, axis=1)


def write_xbw(path, w):
    lines = [f"XBW v1 {w.shape[0]} {w.shape[1]} 4 1"]
    lines += [" ".join(str(v) for v in row) for row in w]
    path.write_text("\n".join(lines) + "\n")


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    x = np.minimum(digits.data, ACT_MAX).astype(np.int64)
    x_tr, x_te, y_tr, y_te = train_test_split(x, digits.target, test_size=N_SAMPLES, random_state=SEED)

    mlp = MLPClassifier(hidden_layer_sizes=(HIDDEN,), alpha=1e-3, max_iter=2000, random_state=SEED)
    mlp.fit(x_tr / ACT_MAX, y_tr)

    # Bias rows see a constant ACT_MAX input.
    w1 = np.vstack([mlp.coefs_[0] / ACT_MAX, mlp.intercepts_[0] / ACT_MAX])
    w2 = np.vstack([mlp.coefs_[1], mlp.intercepts_[1] / ACT_MAX])
    w1q, w2q = quantize(w1), quantize(w2)

    aug = lambda a: np.hstack([a, np.full((len(a), 1), ACT_MAX)])
    best = max(range(12), key=lambda s: (forward(aug(x_tr), w1q, w2q, s) == y_tr).mean())
    acc = (forward(aug(x_te), w1q, w2q, best) == y_te).mean()

    write_xbw(out / "layer1.xbw", w1q)
    write_xbw(out / "layer2.xbw", w2q)
    with open(out / "samples.csv", "w") as f:
        for label, row in zip(y_te, aug(x_te)):
            f.write(",".join([str(label)] + [str(v) for v in row]) + "\n")
    meta = {
        "input_bits": 4,
        "hidden_bits": 4,
        "hidden_shift": int(best),
        "hidden_constant": ACT_MAX,
        "layer1": "layer1.xbw",
        "layer2": "layer2.xbw",
        "samples": "samples.csv",
    }
    (out / "mlp.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"float test acc {mlp.score(x_te / ACT_MAX, y_te):.3f}, quantized {acc:.3f}, shift {best}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures/tiny_mlp")
