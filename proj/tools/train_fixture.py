#!/usr/bin/env python3
"""Train the small classifier used as a test fixture and write it as model JSON.

Three Gaussian clusters in 6 dimensions, a 6-16-16-3 relu network trained with
full-batch gradient descent on cross-entropy. Also writes 10 jittered inputs drawn from the same clusters.
"""
import argparse
import json

import numpy as np


def make_data(rng, n_per_class, dim=6, classes=3):
    centers = rng.normal(scale=1.5, size=(classes, dim))
    xs, ys = [], []
    for c in range(classes):
        xs.append(centers[c] + rng.normal(scale=0.6, size=(n_per_class, dim)))
        ys.append(np.full(n_per_class, c))
    return np.concatenate(xs), np.concatenate(ys)


def init(rng, dims):
    return [(rng.normal(size=(dims[i + 1], dims[i])) * np.sqrt(2.0 / dims[i]), np.zeros(dims[i + 1]))
            for i in range(len(dims) - 1)]


def forward(params, x):
    hs, zs = [x], []
    h = x
    for i, (w, b) in enumerate(params):
        z = h @ w.T + b
        zs.append(z)
        h = np.maximum(z, 0.0) if i + 1 < len(params) else z
        hs.append(h)
    return hs, zs


def train(params, x, y, steps, lr):
    onehot = np.eye(params[-1][0].shape[0])[y]
    for _ in range(steps):
        hs, zs = forward(params, x)
        logits = hs[-1]
        p = np.exp(logits - logits.max(1, keepdims=True))
        p /= p.sum(1, keepdims=True)
        grad = (p - onehot) / len(x)
        for i in reversed(range(len(params))):
            w, b = params[i]
            gw, gb = grad.T @ hs[i], grad.sum(0)
            if i > 0:
                grad = (grad @ w) * (zs[i - 1] > 0)
            params[i] = (w - lr * gw, b - lr * gb)
    return params


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="tests/fixtures/trained_mlp.json")
    ap.add_argument("--inputs", default="tests/fixtures/trained_inputs.json")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    x, y = make_data(rng, 200)
    params = train(init(rng, [6, 16, 16, 3]), x, y, steps=3000, lr=0.1)
    acc = (forward(params, x)[0][-1].argmax(1) == y).mean()
    print(f"train accuracy {acc:.3f}")

    layers = []
    for i, (w, b) in enumerate(params):
        act = {"kind": "relu"} if i + 1 < len(params) else None
        layers.append({"weights": w.tolist(), "bias": b.tolist(), "activation": act})
    with open(args.model, "w") as f:
        json.dump({"layers": layers}, f, indent=1)

    xt, yt = make_data(np.random.default_rng(args.seed), 200)
    pick = np.random.default_rng(args.seed + 1).choice(len(xt), size=10, replace=False)
    held = [{"x": (xt[i] + 0.05 * np.random.default_rng(int(i)).normal(size=xt.shape[1])).tolist(),
             "label": int(yt[i])} for i in pick]
    with open(args.inputs, "w") as f:
        json.dump(held, f, indent=1)


if __name__ == "__main__":
    main()
