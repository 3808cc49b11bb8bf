#!/usr/bin/env python3
"""Train the default LeNet on MNIST and export it in the posit_quant manifest format.

Writes <out>/lenet.json, <out>/lenet.bin (little-endian float32) and
<out>/golden.json (softmax outputs for the first ten test images).
"""

import argparse
import json
import pathlib
import struct
import sys

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


def read_idx(path, magic):
    raw = pathlib.Path(path).read_bytes()
    got, count = struct.unpack(">II", raw[:8])
    if got != magic:
        sys.exit(f"{path}: bad magic {got:#010x}")
    if magic == 0x803:
        rows, cols = struct.unpack(">II", raw[8:16])
        return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, 1, rows, cols)
    return np.frombuffer(raw, dtype=np.uint8, offset=8).astype(np.int64)


class LeNet(nn.Module):
    # conv 5x5x20 -> pool -> conv 5x5x50 -> pool -> fc 500 + relu -> fc 10
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 20, 5)
        self.conv2 = nn.Conv2d(20, 50, 5)
        self.fc1 = nn.Linear(800, 500)
        self.fc2 = nn.Linear(500, 10)

    def forward(self, x):
        x = F.max_pool2d(self.conv1(x), 2, 2)
        x = F.max_pool2d(self.conv2(x), 2, 2)
        x = F.relu(self.fc1(x.flatten(1)))
        return self.fc2(x)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--train-images", required=True)
    ap.add_argument("--train-labels", required=True)
    ap.add_argument("--test-images", required=True)
    ap.add_argument("--test-labels", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--min-accuracy", type=float, default=0.985)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    np.random.seed(args.seed)

    x_train = torch.from_numpy(read_idx(args.train_images, 0x803).astype(np.float32) / 255.0)
    y_train = torch.from_numpy(read_idx(args.train_labels, 0x801))
    x_test = read_idx(args.test_images, 0x803).astype(np.float64) / 255.0
    y_test = read_idx(args.test_labels, 0x801)

    model = LeNet()
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.epochs)
    gen = torch.Generator().manual_seed(args.seed)
    for epoch in range(args.epochs):
        model.train()
        perm = torch.randperm(len(x_train), generator=gen)
        total = 0.0
        for i in range(0, len(perm), 64):
            idx = perm[i:i + 64]
            opt.zero_grad()
            loss = F.cross_entropy(model(x_train[idx]), y_train[idx])
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        sched.step()
        print(f"epoch {epoch + 1}: loss {total / len(perm):.4f}", flush=True)

    # Evaluate in float64 so the recorded baseline matches a wide-accumulator engine.
    model = model.double().eval()
    with torch.no_grad():
        probs = F.softmax(model(torch.from_numpy(x_test)), dim=1).numpy()
    top1 = float((probs.argmax(axis=1) == y_test).mean())
    print(f"test top-1: {top1:.4f}")
    if top1 < args.min_accuracy:
        sys.exit(f"accuracy gate unmet: {top1:.4f} < {args.min_accuracy}")

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = ["conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
             "fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"]
    state = model.float().state_dict()
    tensors, offset, chunks = [], 0, []
    all_weights = []
    for name in names:
        arr = state[name].numpy().astype("<f4")
        if not np.all(np.isfinite(arr)):
            sys.exit(f"{name}: non-finite weights")
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
        all_weights.append(arr.ravel())
    (out / "lenet.bin").write_bytes(b"".join(chunks))

    flat = np.concatenate(all_weights)
    outside = float(np.mean(np.abs(flat) > 1.0))
    print(f"weights outside [-1,1]: {outside:.6f} ({int(np.sum(np.abs(flat) > 1.0))} of {flat.size})")

    manifest = {
        "schema_version": 1,
        "name": "lenet",
        "input_shape": [1, 28, 28],
        "num_classes": 10,
        "preprocessing": {"pixel_scale": 255.0},
        "blob": "lenet.bin",
        "tensors": tensors,
        "layers": [
            {"kind": "conv2d", "weights": "conv1.weight", "bias": "conv1.bias", "stride": 1, "padding": "valid"},
            {"kind": "maxpool2d", "window": 2, "stride": 2},
            {"kind": "conv2d", "weights": "conv2.weight", "bias": "conv2.bias", "stride": 1, "padding": "valid"},
            {"kind": "maxpool2d", "window": 2, "stride": 2},
            {"kind": "flatten"},
            {"kind": "dense", "weights": "fc1.weight", "bias": "fc1.bias"},
            {"kind": "relu"},
            {"kind": "dense", "weights": "fc2.weight", "bias": "fc2.bias"},
            {"kind": "softmax"},
        ],
        "baseline": {
            "dataset": "mnist-t10k",
            "images": int(len(y_test)),
            "top1": top1,
            "weights_outside_unit_interval": outside,
            "seed": args.seed,
            "epochs": args.epochs,
        },
    }
    (out / "lenet.json").write_text(json.dumps(manifest, indent=2) + "\n")

    golden = {"images": list(range(10)),
              "labels": [int(v) for v in y_test[:10]],
              "probabilities": [[float(p) for p in row] for row in probs[:10]]}
    (out / "golden.json").write_text(json.dumps(golden, indent=2) + "\n")


if __name__ == "__main__":
    main()
