#!/usr/bin/env python3
"""Produce the "externally pretrained" source checkpoint the exporter converts.

Pipeline (source-framework side, PyTorch):
  1. synthesize training pairs and a 72-pair evaluation manifest through the
     engine CLI (external interface only),
  2. train a tiny class-token ViT (timm-style tensor names) on the view
     images,
  3. render the deterministic fixture image and record the model's logits on
     it (the parity reference),
  4. save model.safetensors + source_meta.json + fixture files.

Usage: python3 tools/make_source_checkpoint.py --work work --bundle bundle
"""
import argparse
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
from PIL import Image
from safetensors.torch import save_file

MEAN = (0.5, 0.5, 0.5)
STD = (0.25, 0.25, 0.25)
CROP = 224


class Attention(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        b, t, d = x.shape
        qkv = self.qkv(x).reshape(b, t, 3, self.heads, d // self.heads).permute(2, 0, 3, 1, 4)
        q, k, v = qkv.unbind(0)
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, t, d)
        return self.proj(out)


class Block(nn.Module):
    def __init__(self, dim, heads, mlp_ratio):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, eps=1e-6)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        hidden = int(dim * mlp_ratio)
        self.mlp = nn.Sequential()
        self.mlp.fc1 = nn.Linear(dim, hidden)
        self.mlp.act = nn.GELU()
        self.mlp.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        x = x + self.attn(self.norm1(x))
        mlp = self.mlp.fc2(self.mlp.act(self.mlp.fc1(self.norm2(x))))
        return x + mlp


class TinyViT(nn.Module):
    """Standard pre-norm class-token ViT with timm-compatible tensor names."""

    def __init__(self, img_size=224, patch=32, dim=64, depth=4, heads=4,
                 mlp_ratio=2.0, num_classes=9):
        super().__init__()
        grid = img_size // patch
        self.patch_embed = nn.Module()
        self.patch_embed.proj = nn.Conv2d(3, dim, kernel_size=patch, stride=patch)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, grid * grid + 1, dim))
        self.blocks = nn.ModuleList(Block(dim, heads, mlp_ratio) for _ in range(depth))
        self.norm = nn.LayerNorm(dim, eps=1e-6)
        self.head = nn.Linear(dim, num_classes)
        nn.init.normal_(self.cls_token, std=0.02)
        nn.init.normal_(self.pos_embed, std=0.02)

    def forward(self, x):
        x = self.patch_embed.proj(x).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embed
        for block in self.blocks:
            x = block(x)
        return self.head(self.norm(x)[:, 0])


def run_cli(args):
    cmd = [sys.executable, "-m", "configshape.cli", *args]
    result = subprocess.run(cmd, capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(f"engine CLI failed ({result.returncode}): {result.stderr}")
    return result.stdout


def synthesize_manifest(out_dir: Path, pairs: int, seed: int, cfg_path: Path) -> Path:
    cfg_path.write_text(json.dumps({
        "schemaVersion": 1, "pairs": pairs, "resolution": 256, "gridSide": 4,
        "steps": 120, "templateJitter": 0.25, "seed": seed,
    }))
    run_cli(["synthesize", "--config", str(cfg_path), "--out", str(out_dir)])
    return out_dir / "manifest.json"


def load_images(manifest_path: Path):
    manifest = json.loads(manifest_path.read_text())
    root = manifest_path.parent
    categories = manifest["categories"]
    images, labels = [], []
    for rec in manifest["pairs"]:
        for image_key, label_key in (("image1", "label1"), ("image2", "label2")):
            with Image.open(root / rec[image_key]) as img:
                arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
            off = (arr.shape[0] - CROP) // 2
            arr = arr[off:off + CROP, off:off + CROP]
            arr = (arr - np.array(MEAN, dtype=np.float32)) / np.array(STD, dtype=np.float32)
            images.append(arr.transpose(2, 0, 1))
            labels.append(categories.index(rec[label_key]))
    return (torch.from_numpy(np.stack(images)), torch.tensor(labels, dtype=torch.long),
            categories)


def fixture_image(path: Path):
    """Deterministic synthetic 224x224 'photograph': layered gradients,
    discs, and grain. Quantized once so the PNG is the reference."""
    rng = np.random.default_rng(20240601)
    yy, xx = np.meshgrid(np.linspace(0, 1, CROP), np.linspace(0, 1, CROP), indexing="ij")
    base = np.stack([
        0.55 + 0.35 * np.sin(2 * np.pi * (xx * 1.3 + 0.1)),
        0.45 + 0.30 * np.cos(2 * np.pi * (yy * 1.1 + 0.35)),
        0.50 + 0.30 * np.sin(2 * np.pi * (xx * 0.7 + yy * 0.9)),
    ], axis=2)
    for cx, cy, r, color in ((0.3, 0.4, 0.18, (0.9, 0.3, 0.2)),
                             (0.7, 0.3, 0.12, (0.2, 0.7, 0.9)),
                             (0.6, 0.75, 0.22, (0.95, 0.85, 0.3))):
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 < r ** 2
        base[mask] = 0.7 * base[mask] + 0.3 * np.array(color)
    base += rng.normal(0, 0.02, base.shape)
    quant = np.clip(np.floor(base * 255.0 + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(quant, mode="RGB").save(path, format="PNG")
    return quant.astype(np.float32) / 255.0


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--work", type=Path, default=Path("work"))
    parser.add_argument("--bundle", type=Path, default=Path("bundle"))
    parser.add_argument("--train-pairs", type=int, default=144)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    args.work.mkdir(parents=True, exist_ok=True)
    args.bundle.mkdir(parents=True, exist_ok=True)

    print("synthesizing training pairs (engine CLI)...", flush=True)
    train_manifest = synthesize_manifest(
        args.work / "train_ds", args.train_pairs, 888, args.work / "synth_train.json")
    print("synthesizing the 72-pair evaluation manifest...", flush=True)
    synthesize_manifest(args.bundle / "manifest72", 72, 777, args.work / "synth_eval.json")

    images, labels, categories = load_images(train_manifest)
    torch.manual_seed(args.seed)
    model = TinyViT(num_classes=len(categories))
    optimizer = torch.optim.Adam(model.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()
    n = images.shape[0]
    print(f"training tiny ViT on {n} view images...", flush=True)
    for epoch in range(args.epochs):
        order = torch.randperm(n)
        total = 0.0
        for start in range(0, n, 32):
            idx = order[start:start + 32]
            optimizer.zero_grad()
            loss = loss_fn(model(images[idx]), labels[idx])
            loss.backward()
            optimizer.step()
            total += float(loss) * len(idx)
        print(f"  epoch {epoch + 1}: loss {total / n:.4f}", flush=True)

    model.eval()
    fixture = fixture_image(args.work / "fixture.png")
    x = (fixture - np.array(MEAN, dtype=np.float32)) / np.array(STD, dtype=np.float32)
    with torch.no_grad():
        logits = model(torch.from_numpy(x.transpose(2, 0, 1)[None])).numpy()[0]
    (args.work / "fixture_logits.csv").write_text(
        "\n".join(repr(float(v)) for v in logits) + "\n")

    state = {name: value.detach().to(torch.float32).contiguous()
             for name, value in model.state_dict().items()}
    save_file(state, str(args.work / "model.safetensors"))
    (args.work / "source_meta.json").write_text(json.dumps({
        "headCount": 4,
        "layerNormEps": 1e-6,
        "mean": list(MEAN),
        "std": list(STD),
        "categories": categories,
        "fixtureImage": "fixture.png",
        "fixtureLogits": "fixture_logits.csv",
    }, indent=2))
    print(f"source checkpoint written under {args.work}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
