#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/fixtures.

Every expected value here comes from plain numpy loops written for this
script, never from the C++ code under test. Run from the repo root:

    python3 tools/fixtures/make_fixtures.py
"""
import argparse
import json
import pathlib
import zlib
import struct

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

CLASSES = ["drugs", "weapons", "bank_cards", "identity_documents", "illegal_currencies"]
IMAGENET = {"mean": [0.485, 0.456, 0.406], "scale": [0.229, 0.224, 0.225]}


# ---------------------------------------------------------------- oracles

def conv_ref(x, w, b, stride=(1, 1), pads=(0, 0, 0, 0), dil=(1, 1), groups=1):
    n, c, h, wd = x.shape
    m, cg, kh, kw = w.shape
    pt, pl, pb, pr = pads
    xp = np.zeros((n, c, h + pt + pb, wd + pl + pr))
    xp[:, :, pt:pt + h, pl:pl + wd] = x
    oh = (h + pt + pb - dil[0] * (kh - 1) - 1) // stride[0] + 1
    ow = (wd + pl + pr - dil[1] * (kw - 1) - 1) // stride[1] + 1
    out = np.zeros((n, m, oh, ow))
    mg = m // groups
    for b_ in range(n):
        for o in range(m):
            g = o // mg
            for y in range(oh):
                for xx in range(ow):
                    s = 0.0 if b is None else float(b[o])
                    for ci in range(cg):
                        for ky in range(kh):
                            for kx in range(kw):
                                s += xp[b_, g * cg + ci, y * stride[0] + ky * dil[0],
                                        xx * stride[1] + kx * dil[1]] * w[o, ci, ky, kx]
                    out[b_, o, y, xx] = s
    return out


def pool_ref(x, k, stride, pads=(0, 0, 0, 0), ceil_mode=False):
    n, c, h, w = x.shape
    pt, pl, pb, pr = pads

    def size(i, kk, s, p0, p1):
        span = i + p0 + p1 - kk
        o = (-(-span // s) if ceil_mode else span // s) + 1
        # the last window must start inside the input or the begin padding
        if ceil_mode and (o - 1) * s >= i + p0:
            o -= 1
        return o

    oh = size(h, k[0], stride[0], pt, pb)
    ow = size(w, k[1], stride[1], pl, pr)
    out = np.zeros((n, c, oh, ow))
    for b in range(n):
        for ch in range(c):
            for y in range(oh):
                for xx in range(ow):
                    best = -np.inf
                    for ky in range(k[0]):
                        for kx in range(k[1]):
                            iy = y * stride[0] + ky - pt
                            ix = xx * stride[1] + kx - pl
                            if 0 <= iy < h and 0 <= ix < w:
                                best = max(best, x[b, ch, iy, ix])
                    out[b, ch, y, xx] = best
    return out


def bn_ref(x, scale, bias, mean, var, eps):
    out = np.zeros_like(x)
    for ch in range(x.shape[1]):
        out[:, ch] = scale[ch] * (x[:, ch] - mean[ch]) / np.sqrt(var[ch] + eps) + bias[ch]
    return out


def gemm_ref(a, b, c, alpha=1.0, beta=1.0, trans_a=False, trans_b=False):
    a = a.T if trans_a else a
    b = b.T if trans_b else b
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = alpha * s + (beta * np.broadcast_to(c, (m, n))[i, j] if c is not None else 0.0)
    return out


def softmax_ref(x, axis=-1):
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1)
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape[:-1]):
        row = x[idx]
        e = [np.exp(v - max(row)) for v in row]
        out[idx] = [v / sum(e) for v in e]
    return np.moveaxis(out, -1, axis)


def gap_ref(x):
    n, c = x.shape[:2]
    out = np.zeros((n, c, 1, 1))
    for b in range(n):
        for ch in range(c):
            out[b, ch, 0, 0] = sum(x[b, ch].ravel().tolist()) / x[b, ch].size
    return out


def bilinear_ref(plane, out_w, out_h):
    in_h, in_w = plane.shape

    def taps(inn, out):
        res = []
        for d in range(out):
            s = (d + 0.5) * inn / out - 0.5
            s = min(max(s, 0.0), inn - 1)
            lo = int(np.floor(s))
            res.append((lo, min(lo + 1, inn - 1), s - lo))
        return res

    out = np.zeros((out_h, out_w))
    for y, (y0, y1, fy) in enumerate(taps(in_h, out_h)):
        for x, (x0, x1, fx) in enumerate(taps(in_w, out_w)):
            top = plane[y0, x0] + (plane[y0, x1] - plane[y0, x0]) * fx
            bottom = plane[y1, x0] + (plane[y1, x1] - plane[y1, x0]) * fx
            out[y, x] = top + (bottom - top) * fy
    return out


def luma_ref(rgb):
    if rgb.ndim == 2:
        return rgb.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def dhash_ref(rgb):
    small = bilinear_ref(luma_ref(rgb), 9, 8)
    h = 0
    for r in range(8):
        for c in range(8):
            if small[r, c] > small[r, c + 1]:
                h |= 1 << (r * 8 + c)
    return h


def preprocess_ref(rgb, size, mean, scale):
    out = np.zeros((1, 3, size[0], size[1]))
    for ch in range(3):
        plane = rgb[..., ch].astype(np.float64)
        if plane.shape != tuple(size):
            plane = bilinear_ref(plane, size[1], size[0])
        out[0, ch] = (plane / 255.0 - mean[ch]) / scale[ch]
    return out


# ---------------------------------------------------------------- helpers

def png_bytes(rgb):
    """Minimal PNG writer (8-bit RGB or gray, no filtering)."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w = rgb.shape[:2]
    color = 2 if rgb.ndim == 3 else 0
    raw = b"".join(b"\x00" + rgb[y].tobytes() for y in range(h))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data))

    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, color, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def f32(a):
    return np.asarray(a, dtype=np.float32)


def tensor_json(a):
    a = np.asarray(a)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def metadata(total, trainable, size):
    return {
        "class_order": ",".join(CLASSES),
        "preproc": json.dumps({"size": size, **IMAGENET, "resize": "bilinear", "channel_order": "RGB"}),
        "total_params": str(total),
        "trainable_params": str(trainable),
    }


def save_model(path, nodes, inputs, outputs, inits, meta=None, opset=13):
    graph = helper.make_graph(nodes, path.stem, inputs, outputs,
                              [numpy_helper.from_array(f32(v), k) for k, v in inits.items()])
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", opset)],
                              producer_name="make_fixtures")
    model.ir_version = 8
    for k, v in (meta or {}).items():
        entry = model.metadata_props.add()
        entry.key, entry.value = k, v
    onnx.checker.check_model(model)
    path.write_bytes(model.SerializeToString())


def image_input(size):
    return helper.make_tensor_value_info("input", TensorProto.FLOAT, ["N", 3, size, size])


def probs_output():
    return helper.make_tensor_value_info("probs", TensorProto.FLOAT, ["N", 5])


# ---------------------------------------------------------------- models

MICRO_HEAD = np.array([
    [-2.0, 3.0, -2.0],   # drugs: green
    [-2.0, -2.0, 3.0],   # weapons: blue
    [3.0, -2.0, -2.0],   # bank_cards: red
    [1.5, 1.5, -3.0],    # identity_documents: yellow
    [-3.0, 1.5, 1.5],    # illegal_currencies: cyan
])
MICRO_BIAS = np.array([0.0, 0.1, 0.0, -0.1, 0.05])


def micro_forward(x):
    conv = conv_ref(x, np.eye(3).reshape(3, 3, 1, 1), np.zeros(3))
    feat = gap_ref(np.maximum(conv, 0.0)).reshape(x.shape[0], 3)
    return softmax_ref(gemm_ref(feat, MICRO_HEAD, MICRO_BIAS, trans_b=True))


def make_models(out):
    # Conv(1x1 identity) -> Relu -> GAP -> Flatten -> Gemm -> Softmax; 12 + 20 parameters
    save_model(out / "micro.onnx", [
        helper.make_node("Conv", ["input", "conv.w", "conv.b"], ["conv"], name="conv", kernel_shape=[1, 1]),
        helper.make_node("Relu", ["conv"], ["relu"], name="relu"),
        helper.make_node("GlobalAveragePool", ["relu"], ["gap"], name="gap"),
        helper.make_node("Flatten", ["gap"], ["flat"], name="flatten", axis=1),
        helper.make_node("Gemm", ["flat", "fc.w", "fc.b"], ["logits"], name="fc", transB=1),
        helper.make_node("Softmax", ["logits"], ["probs"], name="softmax", axis=-1),
    ], [image_input(32)], [probs_output()],
        {"conv.w": np.eye(3).reshape(3, 3, 1, 1), "conv.b": np.zeros(3),
         "fc.w": MICRO_HEAD, "fc.b": MICRO_BIAS},
        metadata(32, 20, 32))

    save_model(out / "uniform.onnx", [
        helper.make_node("GlobalAveragePool", ["input"], ["gap"], name="gap"),
        helper.make_node("Flatten", ["gap"], ["flat"], name="flatten"),
        helper.make_node("Gemm", ["flat", "fc.w", "fc.b"], ["logits"], name="fc", transB=1),
        helper.make_node("Softmax", ["logits"], ["probs"], name="softmax"),
    ], [image_input(32)], [probs_output()],
        {"fc.w": np.zeros((5, 3)), "fc.b": np.zeros(5)}, metadata(20, 20, 32))

    rng = np.random.default_rng(4)
    dense_in = helper.make_tensor_value_info("input", TensorProto.FLOAT, ["N", 4])
    save_model(out / "dense4.onnx", [
        helper.make_node("Gemm", ["input", "fc.w", "fc.b"], ["probs"], name="fc"),
    ], [dense_in], [probs_output()],
        {"fc.w": rng.normal(size=(4, 5)), "fc.b": rng.normal(size=5)}, metadata(25, 25, 224))

    logits_in = helper.make_tensor_value_info("input", TensorProto.FLOAT, ["N", 5])
    save_model(out / "dense_softmax.onnx", [
        helper.make_node("Gemm", ["input", "fc.w"], ["logits"], name="fc"),
        helper.make_node("Softmax", ["logits"], ["probs"], name="softmax"),
    ], [logits_in], [probs_output()], {"fc.w": np.eye(5)}, metadata(25, 25, 224))

    save_model(out / "no_metadata.onnx", [
        helper.make_node("Gemm", ["input", "fc.w", "fc.b"], ["probs"], name="fc"),
    ], [dense_in], [probs_output()], {"fc.w": np.ones((4, 5)), "fc.b": np.zeros(5)})

    # LSTM over a [T, N, 4] sequence, then a dense head: rejected on the LSTM
    seq_in = helper.make_tensor_value_info("input", TensorProto.FLOAT, [3, "N", 4])
    save_model(out / "lstm.onnx", [
        helper.make_node("LSTM", ["input", "W", "R"], ["", "h"], name="lstm", hidden_size=5),
        helper.make_node("Flatten", ["h"], ["flat"], name="flatten"),
        helper.make_node("Softmax", ["flat"], ["probs"], name="softmax"),
    ], [seq_in], [probs_output()],
        {"W": np.zeros((1, 20, 4)), "R": np.zeros((1, 20, 5))}, metadata(180, 180, 224))

    # One of every supported operator, with a residual Add
    w1 = rng.normal(scale=0.3, size=(4, 3, 3, 3))
    b1 = rng.normal(scale=0.1, size=4)
    bn = [rng.uniform(0.5, 1.5, 4), rng.normal(scale=0.1, size=4), rng.normal(scale=0.1, size=4),
          rng.uniform(0.5, 1.5, 4)]
    w2 = rng.normal(scale=0.3, size=(4, 2, 3, 3))
    fc = rng.normal(scale=0.5, size=(4, 5))
    fcb = rng.normal(scale=0.1, size=5)
    total = w1.size + b1.size + 4 * 4 + w2.size + fc.size + fcb.size
    save_model(out / "resblock.onnx", [
        helper.make_node("Conv", ["input", "c1.w", "c1.b"], ["c1"], name="c1", kernel_shape=[3, 3],
                         strides=[2, 2], auto_pad="SAME_UPPER"),
        helper.make_node("BatchNormalization", ["c1", "bn.s", "bn.b", "bn.m", "bn.v"], ["bn"], name="bn",
                         epsilon=1e-3),
        helper.make_node("Relu", ["bn"], ["r1"], name="r1"),
        helper.make_node("Conv", ["r1", "c2.w"], ["c2"], name="c2", kernel_shape=[3, 3], pads=[1, 1, 1, 1],
                         group=2),
        helper.make_node("Add", ["r1", "c2"], ["sum"], name="residual"),
        helper.make_node("MaxPool", ["sum"], ["pool"], name="pool", kernel_shape=[3, 3], strides=[2, 2],
                         pads=[1, 1, 1, 1]),
        helper.make_node("GlobalAveragePool", ["pool"], ["gap"], name="gap"),
        helper.make_node("Flatten", ["gap"], ["flat"], name="flatten"),
        helper.make_node("Gemm", ["flat", "fc.w", "fc.b"], ["logits"], name="fc"),
        helper.make_node("Softmax", ["logits"], ["probs"], name="softmax"),
    ], [image_input(16)], [probs_output()],
        {"c1.w": w1, "c1.b": b1, "bn.s": bn[0], "bn.b": bn[1], "bn.m": bn[2], "bn.v": bn[3],
         "c2.w": w2, "fc.w": fc, "fc.b": fcb},
        metadata(total, fc.size + fcb.size, 16))

    def resblock_forward(x):
        h = conv_ref(x, f32(w1), f32(b1), stride=(2, 2), pads=(0, 0, 1, 1))  # SAME_UPPER for 16/2 with k3
        h = np.maximum(bn_ref(h, *[f32(v) for v in bn], 1e-3), 0.0)
        h = h + conv_ref(h, f32(w2), None, pads=(1, 1, 1, 1), groups=2)
        h = pool_ref(h, (3, 3), (2, 2), (1, 1, 1, 1))
        return softmax_ref(gemm_ref(gap_ref(h).reshape(x.shape[0], 4), f32(fc), f32(fcb)))

    goldens = {}
    x = f32(rng.uniform(-2, 2, size=(2, 3, 32, 32)))
    goldens["micro"] = {"input": tensor_json(x), "output": tensor_json(micro_forward(x.astype(np.float64))),
                        "total_params": 32}
    x = f32(rng.uniform(-2, 2, size=(3, 3, 16, 16)))
    goldens["resblock"] = {"input": tensor_json(x), "output": tensor_json(resblock_forward(x.astype(np.float64))),
                           "total_params": int(total)}
    (out / "golden_outputs.json").write_text(json.dumps(goldens))


# ---------------------------------------------------------------- kernels

def make_kernel_cases(out):
    rng = np.random.default_rng(7)
    r = lambda *s: f32(rng.uniform(-1, 1, size=s))
    cases = []

    def conv_case(name, x, w, b, stride=(1, 1), pads=(0, 0, 0, 0), dil=(1, 1), groups=1):
        cases.append({"op": "conv", "name": name, "x": tensor_json(x), "w": tensor_json(w),
                      "b": None if b is None else tensor_json(b), "stride": list(stride),
                      "pads": list(pads), "dilation": list(dil), "groups": groups,
                      "expected": tensor_json(conv_ref(x, w, b, stride, pads, dil, groups))})

    conv_case("conv_hand", f32(np.arange(1, 10).reshape(1, 1, 3, 3)), f32(np.ones((1, 1, 2, 2))), None)
    conv_case("conv_3x3_pad1", r(2, 3, 7, 7), r(4, 3, 3, 3), r(4), pads=(1, 1, 1, 1))
    conv_case("conv_stride2_asym", r(1, 2, 9, 8), r(3, 2, 3, 3), r(3), stride=(2, 2), pads=(0, 0, 1, 1))
    conv_case("conv_dilated", r(1, 2, 10, 10), r(2, 2, 3, 3), None, dil=(2, 2))
    conv_case("conv_grouped", r(1, 4, 6, 6), r(6, 2, 3, 3), r(6), pads=(1, 1, 1, 1), groups=2)
    conv_case("conv_depthwise", r(2, 3, 5, 5), r(3, 1, 3, 3), r(3), groups=3)
    conv_case("conv_7x7_s2", r(1, 3, 20, 20), r(8, 3, 7, 7), r(8), stride=(2, 2), pads=(3, 3, 3, 3))
    conv_case("conv_pointwise", r(2, 16, 5, 5), r(12, 16, 1, 1), r(12))
    conv_case("conv_wide_k", r(1, 64, 6, 6), r(8, 64, 3, 3), r(8), pads=(1, 1, 1, 1))

    def dense_case(name, a, b, c, alpha=1.0, beta=1.0, ta=False, tb=False):
        cases.append({"op": "dense", "name": name, "a": tensor_json(a), "b": tensor_json(b),
                      "c": None if c is None else tensor_json(c), "alpha": alpha, "beta": beta,
                      "trans_a": ta, "trans_b": tb, "expected": tensor_json(gemm_ref(a, b, c, alpha, beta, ta, tb))})

    dense_case("dense_bias", r(3, 7), r(7, 5), r(5))
    dense_case("dense_trans_b", r(4, 6), r(5, 6), r(5), tb=True)
    dense_case("dense_trans_a", r(6, 2), r(6, 5), None, ta=True)
    dense_case("dense_alpha_beta", r(2, 3), r(3, 4), r(2, 4), alpha=0.5, beta=2.0)
    dense_case("dense_long_k", r(3, 700), r(700, 9), r(9))
    dense_case("dense_wide_n", r(2, 40), r(40, 600), r(600))

    for name, shape in [("bn_small", (2, 3, 4, 4)), ("bn_wide", (1, 8, 3, 5))]:
        c = shape[1]
        x, s, b, m = r(*shape), r(c), r(c), r(c)
        v = f32(rng.uniform(0.1, 2.0, c))
        cases.append({"op": "batch_norm", "name": name, "x": tensor_json(x), "scale": tensor_json(s),
                      "bias": tensor_json(b), "mean": tensor_json(m), "var": tensor_json(v), "epsilon": 1e-5,
                      "expected": tensor_json(bn_ref(x, s, b, m, v, 1e-5))})

    for name, shape, k, s, p, ceil in [("pool_2x2", (1, 2, 6, 6), (2, 2), (2, 2), (0, 0, 0, 0), False),
                                      ("pool_3x3_pad", (2, 3, 7, 7), (3, 3), (2, 2), (1, 1, 1, 1), False),
                                      ("pool_ceil", (1, 1, 7, 7), (2, 2), (2, 2), (0, 0, 0, 0), True),
                                      ("pool_rect", (1, 2, 5, 8), (2, 3), (1, 2), (0, 1, 0, 1), False)]:
        x = r(*shape)
        cases.append({"op": "max_pool", "name": name, "x": tensor_json(x), "kernel": list(k), "stride": list(s),
                      "pads": list(p), "ceil_mode": ceil, "expected": tensor_json(pool_ref(x, k, s, p, ceil))})

    x = r(2, 3, 5, 4)
    cases.append({"op": "global_average_pool", "name": "gap", "x": tensor_json(x), "expected": tensor_json(gap_ref(x))})

    for name, x, axis in [("softmax_rows", f32(rng.normal(scale=3, size=(4, 5))), -1),
                          ("softmax_axis1", f32(rng.normal(scale=3, size=(2, 5, 3))), 1),
                          ("softmax_large", f32([[1000.0, 1001.0, 999.0, 1000.5, 998.0]]), -1),
                          ("softmax_hand", f32([[1, 2, 3, 4, 5]]), -1)]:
        cases.append({"op": "softmax", "name": name, "x": tensor_json(x), "axis": axis,
                      "expected": tensor_json(softmax_ref(x, axis))})

    a, b = r(2, 3, 4, 4), r(3, 1, 1)
    cases.append({"op": "add", "name": "add_broadcast", "a": tensor_json(a), "b": tensor_json(b),
                  "expected": tensor_json(a.astype(np.float64) + b.astype(np.float64))})

    (out / "kernels").mkdir(exist_ok=True)
    (out / "kernels" / "reference.json").write_text(json.dumps({"cases": cases}))


# ---------------------------------------------------------------- images

def make_image_fixtures(out):
    rng = np.random.default_rng(11)
    grid = rng.integers(0, 256, size=(8, 9))
    big = rng.integers(0, 256, size=(23, 37, 3))
    smooth = np.stack([np.add.outer(np.arange(40) * 3, np.arange(50) * 2) % 256] * 3, axis=-1)
    dhash = {
        "grid": {"width": 9, "height": 8, "channels": 1, "pixels": grid.ravel().tolist(),
                 "hash": f"{dhash_ref(grid):016x}"},
        "rgb": {"width": 37, "height": 23, "channels": 3, "pixels": big.ravel().tolist(),
                "hash": f"{dhash_ref(big):016x}"},
        "smooth": {"width": 50, "height": 40, "channels": 3, "pixels": smooth.ravel().tolist(),
                   "hash": f"{dhash_ref(smooth):016x}"},
    }
    (out / "dhash.json").write_text(json.dumps(dhash))

    img = rng.integers(0, 256, size=(8, 8, 3))
    pre = {"pixels": img.ravel().tolist(), "width": 8, "height": 8,
           "same_size": tensor_json(preprocess_ref(img, (8, 8), IMAGENET["mean"], IMAGENET["scale"])),
           "resized": tensor_json(preprocess_ref(img, (5, 6), IMAGENET["mean"], IMAGENET["scale"]))}
    (out / "preprocess.json").write_text(json.dumps(pre))


COLORS = {
    "drugs": (20, 200, 30),
    "weapons": (25, 30, 210),
    "bank_cards": (215, 20, 25),
    "identity_documents": (220, 210, 20),
    "illegal_currencies": (20, 205, 215),
}


def colored(cls, variant, size=96):
    """A tinted pattern whose mean color stays near the class color."""
    rng = np.random.default_rng(1000 + 37 * variant + CLASSES.index(cls))
    base = np.array(COLORS[cls], dtype=np.float64)
    yy, xx = np.mgrid[0:size, 0:size] / size
    kind = variant % 4
    if kind == 0:
        pattern = xx
    elif kind == 1:
        pattern = yy
    elif kind == 2:
        pattern = (np.floor(xx * 4) + np.floor(yy * 4)) % 2
    else:
        pattern = np.sin(xx * 7 + variant) * np.cos(yy * 5)
    pattern = (pattern - pattern.mean()) * 60 + rng.normal(scale=6, size=(size, size))
    img = base[None, None, :] + pattern[..., None] * (base[None, None, :] > 100)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_eval_set(out):
    d = out / "eval"
    d.mkdir(exist_ok=True)
    lines, permuted = [], []
    # 5-cycle over the first image of each class: 5 labels change, 45 stay
    cycle = {c: CLASSES[(i + 1) % 5] for i, c in enumerate(CLASSES)}
    entries = []
    for cls in CLASSES:
        for v in range(10):
            img = colored(cls, v, size=64 + 8 * (v % 3))
            name = f"{cls}_{v:02d}.png"
            (d / name).write_bytes(png_bytes(img))
            entries.append((name, cls, v, dhash_ref(img)))
    counts = {c: 10 for c in CLASSES}
    header = {"schema": "onionlens-manifest", "version": 1, "total": 50, "counts": counts}
    for name, cls, v, h in entries:
        row = {"path": name, "label": cls, "dhash": f"{h:016x}", "split": "test", "source_url": ""}
        lines.append(row)
        permuted.append(dict(row, label=cycle[cls] if v == 0 else cls))
    for fname, rows in [("manifest.jsonl", lines), ("manifest_permuted.jsonl", permuted)]:
        with open(d / fname, "w") as f:
            f.write(json.dumps(header) + "\n")
            for row in rows:
                f.write(json.dumps(row) + "\n")


# ---------------------------------------------------------------- mock sites

DRUGS_HOST = "drugsmkt2vx7qk4rjh5nwpl3fa6oeyc2bdt4gm7zus5ixhqavnkrefyd.onion"
WEAPONS_HOST = "armory7bq3wzdt5jpxkv2nacg6lhyfe4uorm3sivbt7qxnzcdhwplkad.onion"

DRUGS_PAGES = {
    "index.html": """<!DOCTYPE html>
<html><head><title>Green Leaf Pharmacy</title>
<style>body { background: #eee }</style>
<script>var tracking = "cocaine heroin";</script></head>
<body>
<h1>Green Leaf Pharmacy</h1>
<p>Premium cannabis and cocaine shipped in stealth packaging.</p>
<p>Our pills are lab tested. Heroin and drug samples available for trusted buyers.</p>
<img src="/img/leaf_a.png" alt="cannabis buds">
<img src="/img/leaf_b.png" alt="pills">
<img src="/img/leaf_a_copy.png">
<img src="/img/icon.png">
<a href="/shop.html">Shop</a>
<a href="/about.html">About</a>
<a href="http://elsewhere3nqv5ah7yk2ufbxw6eigmjprd4lcsztoqx5hbnvakjeld.onion/">Partner market</a>
</body></html>
""",
    "shop.html": """<html><head><title>Shop</title></head><body>
<h2>Cannabis strains</h2>
<p>Cocaine, pure grade. Pills by the hundred. Drug deals every week.</p>
<img src="img/leaf_c.png" alt="cocaine">
<img src="/img/missing.png">
<a href="/index.html">Back</a>
<a href="/faq.html">FAQ</a>
</body></html>
""",
    "about.html": """<html><body><p>Trusted drug vendor since 2019. Escrow accepted, cannabis only in bulk.</p>
<img src="/img/leaf_b.png"></body></html>
""",
    "faq.html": """<html><body><p>Depth two page, never crawled at max_depth 1.</p></body></html>
""",
}

WEAPONS_PAGES = {
    "index.html": """<html><head><title>Iron Armory</title></head><body>
<h1>Iron Armory</h1>
<p>Pistol and rifle stock, ammo by the case. Every gun ships disassembled.</p>
<img src="/img/gun_a.png"><img src="/img/gun_b.png">
<a href="/stock.html">Stock</a>
</body></html>
""",
    "stock.html": """<html><body><p>Rifle scopes, pistol magazines, ammo crates.</p>
<img src="/img/gun_c.png"></body></html>
""",
}


def make_sites(out):
    sites = out / "sites"
    for host, pages, cls, names in [(DRUGS_HOST, DRUGS_PAGES, "drugs", ["leaf_a", "leaf_b", "leaf_c"]),
                                    (WEAPONS_HOST, WEAPONS_PAGES, "weapons", ["gun_a", "gun_b", "gun_c"])]:
        root = sites / host
        (root / "img").mkdir(parents=True, exist_ok=True)
        for name, html in pages.items():
            (root / name).write_text(html)
        for v, name in enumerate(names):
            (root / "img" / f"{name}.png").write_bytes(png_bytes(colored(cls, v, size=96 + 16 * v)))
        if cls == "drugs":
            (root / "img" / "leaf_a_copy.png").write_bytes((root / "img" / "leaf_a.png").read_bytes())
            (root / "img" / "icon.png").write_bytes(png_bytes(colored(cls, 9, size=16)))
    (sites / "hosts.json").write_text(json.dumps({"drugs": DRUGS_HOST, "weapons": WEAPONS_HOST}, indent=2) + "\n")


# ---------------------------------------------------------------- embeddings

SEEDS = {
    "drugs": ["drug", "cannabis", "cocaine", "heroin", "pills"],
    "weapons": ["gun", "pistol", "rifle", "ammo"],
    "bank_cards": ["card", "visa", "cvv", "dumps"],
    "identity_documents": ["passport", "id", "license", "citizenship"],
    "illegal_currencies": ["counterfeit", "bills", "banknote", "currency"],
}
RELATED = {
    "drugs": ["pharmacy", "strains", "buds", "grade", "lab", "tested", "samples", "pure", "dose"],
    "weapons": ["armory", "scopes", "magazines", "crates", "caliber", "iron", "disassembled"],
    "bank_cards": ["cards", "balance", "pin", "bank", "dump"],
    "identity_documents": ["passports", "scan", "drivers", "documents"],
    "illegal_currencies": ["notes", "euro", "dollar", "printed"],
}
GENERIC = ["buy", "shop", "market", "vendor", "trusted", "stealth", "packaging", "shipped", "ships",
           "escrow", "accepted", "bulk", "stock", "case", "every", "week", "deals", "premium", "green",
           "leaf", "buyers", "available", "hundred", "back", "faq", "partner", "since", "depth",
           "never", "crawled", "max", "stock", "store", "price", "quality", "worldwide"]


def make_embeddings(out):
    rng = np.random.default_rng(23)
    dim = 16
    rows = {}

    def put(word, vec):
        if word not in rows:
            rows[word] = vec

    for i, cls in enumerate(CLASSES):
        for j, word in enumerate(SEEDS[cls]):
            v = np.zeros(dim)
            v[i] = 1.0
            v[5:] = rng.normal(scale=0.15, size=dim - 5)
            put(word, v)
        for word in RELATED[cls]:
            v = np.zeros(dim)
            v[i] = 0.7
            v[5:] = rng.normal(scale=0.3, size=dim - 5)
            put(word, v)
    for word in GENERIC:
        v = np.zeros(dim)
        v[:5] = rng.normal(scale=0.05, size=5)
        v[5:] = rng.normal(scale=0.5, size=dim - 5)
        put(word, v)
    with open(out / "embeddings.txt", "w") as f:
        for word, v in rows.items():
            f.write(word + " " + " ".join(f"{x:.6f}" for x in v) + "\n")


def make_codec_fixtures(out):
    from PIL import Image
    d = out / "codecs"
    d.mkdir(exist_ok=True)
    rng = np.random.default_rng(31)
    rgb = rng.integers(0, 256, size=(72, 80, 3), dtype=np.uint8)
    Image.fromarray(rgb).save(d / "rgb.png")
    Image.fromarray(rgb).save(d / "rgb.jpg", quality=90)
    Image.fromarray(rgb).save(d / "rgb.webp", lossless=True)
    Image.fromarray(rgb[..., 0]).save(d / "gray.png")
    rgba = np.dstack([rgb, np.full((72, 80), 255, dtype=np.uint8)])
    Image.fromarray(rgba, "RGBA").save(d / "rgba.png")
    # Two-frame GIF: the first frame is a palette image with 4 exact colors.
    palette = np.array([[255, 0, 0], [0, 255, 0], [0, 0, 255], [250, 250, 250]], dtype=np.uint8)
    idx = (np.add.outer(np.arange(70) // 10, np.arange(66) // 11) % 4).astype(np.uint8)
    frames = [Image.fromarray(palette[idx]), Image.fromarray(palette[(idx + 1) % 4])]
    frames[0].save(d / "anim.gif", save_all=True, append_images=frames[1:], duration=100, loop=0)
    (d / "icon16.png").write_bytes(png_bytes(rgb[:16, :16]))
    jpg = (d / "rgb.jpg").read_bytes()
    (d / "truncated.jpg").write_bytes(jpg[: len(jpg) // 3])
    expected = {"rgb": rgb.ravel().tolist(), "gif_first": palette[idx].ravel().tolist()}
    (d / "expected.json").write_text(json.dumps(expected))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures")
    ap.add_argument("--data", default="data")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    make_models(out / "models")
    make_kernel_cases(out)
    make_image_fixtures(out)
    make_eval_set(out)
    make_sites(out)
    make_embeddings(out)
    make_codec_fixtures(out)
    data = pathlib.Path(args.data)
    data.mkdir(exist_ok=True)
    (data / "seed_terms.json").write_text(json.dumps(SEEDS, indent=2) + "\n")


if __name__ == "__main__":
    main()
