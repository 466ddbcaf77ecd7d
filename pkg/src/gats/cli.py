"""``gats`` command-line interface.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""
import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, archive
from .archive import ArchiveError
from .errors import GatsError
from .rng import Stream

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _ints(text):
    try:
        return [int(x) for x in text.replace("x", ",").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _patch(text):
    vals = _ints(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"patch must look like 32x20, got {text!r}")
    return vals


def _conds(text):
    out = {}
    for part in text.split(","):
        if not part:
            continue
        k, _, v = part.partition("=")
        try:
            out[k] = float(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad condition {part!r}; use key=value") from None
    return out


def _dump(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    print(text)


# -- gen-data ---------------------------------------------------------------


def cmd_gen_data(args, argv):
    from .datagen import rd_corpus, synthetic_lowrank

    started = archive.now()
    if args.kind == "rd1d":
        trajs, conds = rd_corpus(args.n, seed=args.seed, nu=args.nu, rho=args.rho, nx=args.nx,
                                 nt=args.nt, t_end=args.t_end, n_modes=args.modes)
        config = {"kind": "rd1d", "nu": args.nu, "rho": args.rho, "nx": args.nx, "nt": args.nt,
                  "t_end": args.t_end, "n": args.n, "modes": args.modes}
        archive.save_corpus(args.out, trajs, conds, meta=config)
    else:
        if args.dims is None or args.ranks is None:
            raise UsageError("gen-data lowrank needs --dims and --ranks")
        samples = synthetic_lowrank(args.dims, args.ranks, args.decay, args.noise, args.n, args.seed)
        config = {"kind": "lowrank", "dims": args.dims, "ranks": args.ranks, "decay": args.decay,
                  "noise": args.noise, "n": args.n}
        archive.save_corpus(args.out, samples, meta=config)
    archive.write_run_manifest(args.out, "gen-data", argv, config, seeds={"seed": args.seed},
                               outputs=[args.out], started=started)
    return EXIT_OK


# -- anchors / encode / decode ---------------------------------------------


def _encoding_config(args, anchor_man=None):
    kind = (args.type or (anchor_man or {}).get("type", "")).upper()
    if kind == "MGP":
        rank = args.rank if args.rank is not None else (anchor_man or {}).get("rank")
        patch = args.patch if args.patch is not None else (anchor_man or {}).get("patch")
        if rank is None:
            raise UsageError("MGP needs --rank")
        cfg = {"type": "MGP", "rank": int(rank), "patch": patch}
    elif kind == "TGP":
        ranks = args.ranks if args.ranks is not None else (anchor_man or {}).get("ranks")
        modes = args.modes if args.modes is not None else (anchor_man or {}).get("aligned_modes")
        if ranks is None or modes is None:
            raise UsageError("TGP needs --ranks and --modes")
        if len(ranks) != len(modes):
            raise UsageError("--ranks needs one entry per aligned mode")
        factors = args.factors or (anchor_man or {}).get("factors", "gram")
        cfg = {"type": "TGP", "ranks": list(ranks), "aligned_modes": sorted(modes), "factors": factors}
    else:
        raise UsageError("--type must be mgp or tgp")
    if anchor_man is not None:
        for key in ("type", "rank", "patch", "ranks", "aligned_modes"):
            if key in cfg and key in anchor_man and anchor_man[key] != cfg[key]:
                raise UsageError(f"--{key} {cfg[key]} disagrees with the anchor archive ({anchor_man[key]})")
    return cfg


def cmd_anchor(args, argv):
    from .pipeline import build_anchors

    started = archive.now()
    cfg = _encoding_config(args)
    ids, samples, _, _ = archive.load_corpus(args.inp)
    anchors = build_anchors(samples, cfg, subsample=args.subsample, seed=args.seed, threads=args.threads)
    meta = dict(cfg, corpus_ids=ids, subsample=args.subsample,
                approximate=bool(args.subsample and args.subsample < len(samples)))
    archive.save_anchors(args.out, anchors, meta)
    archive.write_run_manifest(args.out, "anchor", argv, cfg, seeds={"seed": args.seed},
                               anchor_hashes=anchors.hashes(), inputs=[args.inp], outputs=[args.out],
                               started=started)
    return EXIT_OK


def cmd_encode(args, argv):
    from .pipeline import encode_corpus

    started = archive.now()
    anchors, aman = archive.load_anchors(args.anchor)
    cfg = _encoding_config(args, aman)
    ids, samples, conds, _ = archive.load_corpus(args.inp)
    prims = encode_corpus(samples, cfg, anchors, ids=ids, threads=args.threads)
    first = samples[0]
    meta = {"type": cfg["type"], "dims": list(np.shape(first)), "anchor_hashes": {str(k): v for k, v in anchors.hashes().items()}}
    if cfg["type"] == "MGP":
        meta.update(rank=cfg["rank"], ranks=[cfg["rank"]], patch=cfg["patch"], channels=len(prims[0]),
                    aligned_modes=[2])
        off = [sid for sid, P in zip(ids, prims) if not all(p.on_manifold for p in P)]
        meta["off_manifold"] = off
    else:
        meta.update(ranks=cfg["ranks"], aligned_modes=cfg["aligned_modes"], factors=cfg["factors"])
    archive.save_primitives(args.out, prims, ids, meta, conds)
    archive.write_run_manifest(args.out, "encode", argv, cfg, anchor_hashes=anchors.hashes(),
                               inputs=[args.inp, args.anchor], outputs=[args.out], started=started)
    return EXIT_OK


def cmd_decode(args, argv):
    from .pipeline import decode_sample

    started = archive.now()
    ids, prims, conds, man = archive.load_primitives(args.inp)
    if args.anchor:
        anchors, _ = archive.load_anchors(args.anchor)
        want = {str(k): v for k, v in anchors.hashes().items()}
        if want != man.get("anchor_hashes"):
            print("decode: primitive archive was encoded against different anchors", file=sys.stderr)
            return EXIT_FAIL
    arrays = [decode_sample(P, man) for P in prims]
    archive.save_corpus(args.out, arrays, conds, ids=ids, meta={"decoded_from": str(args.inp)})
    archive.write_run_manifest(args.out, "decode", argv, {"in": str(args.inp)},
                               inputs=[args.inp], outputs=[args.out], started=started)
    return EXIT_OK


# -- diagnostics ------------------------------------------------------------


def cmd_stats(args, argv):
    from .metrics import error_report

    rids, ref, _, _ = archive.load_corpus(args.ref)
    eids, est, _, _ = archive.load_corpus(args.est)
    if rids != eids:
        raise UsageError("reference and estimate corpora have different sample ids")
    reports = []
    for sid, X, Y in zip(rids, ref, est):
        rep = error_report(X, Y, time_mode=args.time_mode, value_range=args.range).to_json()
        reports.append(dict(rep, id=sid))
    keys = ["rel_err_l1", "rel_err_l2", "rmse"]
    mean = {k: float(np.mean([r[k] for r in reports])) for k in keys}
    _dump({"samples": reports, "mean": mean}, args.out)
    return EXIT_OK


def cmd_mds(args, argv):
    from .metrics import classical_mds
    from .pipeline import mgp_matrices
    from .linalg import truncated_svd
    from .procrustes import op_align

    ids, samples, _, _ = archive.load_corpus(args.inp)
    cfg = {"patch": args.patch}
    frames = [truncated_svd(mgp_matrices(X, cfg)[args.channel], args.rank).V for X in samples]
    stages = {"raw": frames}
    if args.anchor:
        anchors, _ = archive.load_anchors(args.anchor)
        V0 = anchors[f"c{args.channel}"].frame
        stages["aligned"] = [op_align(V, V0).aligned for V in frames]
    rows = []
    for stage, fr in stages.items():
        F = np.stack([V.ravel() for V in fr])
        sq = np.sum(F * F, axis=1)
        D = np.sqrt(np.clip(sq[:, None] + sq[None, :] - 2 * F @ F.T, 0.0, None))
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
        Y = classical_mds(D, 2)
        rows += [(sid, stage, float(y[0]), float(y[1])) for sid, y in zip(ids, Y)]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "stage", "x", "y"])
        for sid, st, x, y in rows:
            w.writerow([sid, st, repr(x), repr(y)])
    return EXIT_OK


def cmd_validate_prop2(args, argv):
    from .procrustes import ell, mc_aligned_distance

    mean, se = mc_aligned_distance(args.p, args.r, args.trials, seed=args.seed, threads=args.threads)
    target = 1.0 - ell(args.p / args.r)
    ok = abs(mean - target) <= args.band
    _dump({
        "p": args.p, "r": args.r, "trials": args.trials, "seed": args.seed,
        "mean": mean, "stderr": None if math.isnan(se) else se,
        "analytic": target, "band": args.band, "status": "PASS" if ok else "FAIL",
    })
    return EXIT_OK if ok else EXIT_FAIL


# -- diffusion --------------------------------------------------------------


def cmd_toy_diffusion(args, argv):
    from .diffusion import DiffusionSchedule, ToyConfig, run_toy

    started = archive.now()
    cfg = ToyConfig(N=args.n_train, law=args.law, a=args.a, b=args.b)
    sched = DiffusionSchedule()
    res = run_toy(cfg, steps=args.steps, seed=args.seed, lr=args.lr, hidden=args.hidden, batch_size=args.batch,
                  ddim_steps=args.ddim_steps, n_samples=args.samples, schedule=sched)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "samples.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "x"])
        for (u, v), x in zip(res["samples"], res["x"]):
            w.writerow([repr(float(u)), repr(float(v)), repr(float(x))])
    _write_score_field(out / "score_field_t10.csv", res["net"], res["standardizer"], sched, res["samples"])
    metrics = {"law": args.law, "a": args.a, "b": args.b, "steps": args.steps, "w1": res["w1"],
               "mode_fractions": res["mode_fractions"], "loss_trace": res["trace"]}
    _dump(metrics, out / "metrics.json")
    archive.write_run_manifest(out, "toy-diffusion", argv, dict(vars(cfg), steps=args.steps, lr=args.lr,
                                                              hidden=args.hidden, batch=args.batch,
                                                              ddim_steps=args.ddim_steps, samples=args.samples),
                               seeds={"seed": args.seed}, outputs=[out], started=started)
    return EXIT_OK


def _write_score_field(path, net, std, sched, samples, t=10, n=25):
    """Learned score ``-eps / sqrt(1 - ab_t)`` on a grid, in original (u, v) coordinates."""
    lo, hi = np.percentile(samples, 1, axis=0), np.percentile(samples, 99, axis=0)
    hi = np.where(hi - lo < 1e-6, lo + 1.0, hi)
    gu, gv = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
    pts = np.column_stack([gu.ravel(), gv.ravel()])
    eps = net(std.transform(pts), np.full(len(pts), t))
    score = -eps / math.sqrt(1.0 - sched.alpha_bar(t)) / std.scale
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "score_u", "score_v"])
        for p, s in zip(pts, score):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(s[0])), repr(float(s[1]))])


def cmd_train(args, argv):
    from .diffusion import DiffusionSchedule, ScoreNet, Standardizer, save_checkpoint, train
    from .pipeline import flatten_primitive, primitive_layout

    started = archive.now()
    ids, prims, conds, man = archive.load_primitives(args.inp)
    data = np.stack([flatten_primitive(P) for P in prims])
    std = Standardizer.fit(data)
    keys = [k for k in (args.cond_keys or "").split(",") if k]
    cond = cstd = None
    if keys:
        try:
            raw = np.array([[c[k] for k in keys] for c in conds], dtype=np.float64)
        except (TypeError, KeyError) as exc:
            raise UsageError(f"primitive archive lacks condition key {exc}") from None
        cstd = Standardizer.fit(raw)
        cond = cstd.transform(raw)
    sched = DiffusionSchedule()
    net = ScoreNet(data.shape[1], hidden=args.hidden, cond_dim=len(keys), T=sched.T, seed=Stream(args.seed, "net"))
    net, trace = train(net, std.transform(data), sched, args.steps, lr=args.lr, seed=args.seed,
                       batch_size=args.batch, cond=cond)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.bin", net)
    info = {"format": "gats-model", "standardizer": std.to_json(), "cond_keys": keys,
            "cond_standardizer": cstd.to_json() if cstd else None,
            "layout": primitive_layout(prims[0]), "primitive_manifest": {k: man[k] for k in man if k != "samples"},
            "loss_trace": trace, "n_params": int(net.n_params)}
    archive._write_json(out / "model.json", info)
    archive.write_run_manifest(out, "train", argv, {"steps": args.steps, "lr": args.lr, "batch": args.batch,
                                                    "hidden": args.hidden, "cond_keys": keys,
                                                    "standardizer": std.to_json()},
                               seeds={"seed": args.seed}, anchor_hashes=man.get("anchor_hashes"),
                               inputs=[args.inp], outputs=[out], started=started)
    return EXIT_OK


def cmd_sample(args, argv):
    from .diffusion import DiffusionSchedule, Standardizer, ddim_sample, load_checkpoint
    from .pipeline import unflatten_primitive

    started = archive.now()
    mdir = Path(args.model)
    net = load_checkpoint(mdir / "model.bin")
    info = json.loads((mdir / "model.json").read_text())
    std = Standardizer.from_json(info["standardizer"])
    cond = None
    if info["cond_keys"]:
        given = args.cond or {}
        missing = [k for k in info["cond_keys"] if k not in given]
        if missing:
            raise UsageError(f"model is conditional; pass --cond with {','.join(missing)}")
        raw = np.array([given[k] for k in info["cond_keys"]])
        cond = Standardizer.from_json(info["cond_standardizer"]).transform(raw)
    z = ddim_sample(net, DiffusionSchedule(T=net.T), args.ddim_steps, args.n, seed=args.seed, cond=cond)
    vecs = std.inverse(z)
    pman = info["primitive_manifest"]
    prims = [unflatten_primitive(v, info["layout"], pman) for v in vecs]
    ids = [f"gen{i:05d}" for i in range(args.n)]
    meta = dict(pman, generated=True)
    conds = [args.cond] * args.n if args.cond else None
    archive.save_primitives(args.out, prims, ids, meta, conds)
    archive.write_run_manifest(args.out, "sample", argv, {"n": args.n, "ddim_steps": args.ddim_steps,
                                                          "cond": args.cond},
                               seeds={"seed": args.seed}, inputs=[mdir], outputs=[args.out], started=started)
    return EXIT_OK


def cmd_selfcheck(args, argv):
    from .selfcheck import run_selfcheck

    ok = run_selfcheck(verbose=True)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------


def build_parser():
    from .kernels import BACKEND

    p = argparse.ArgumentParser(prog="gats", description="Anchored Grassmannian tensor primitives.")
    p.add_argument("--version", action="version",
                   version=f"gats {__version__} (dtz v1, archive v{archive.ARCHIVE_VERSION}, checkpoint v1, kernels={BACKEND})")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def common(sp, seed=True, threads=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if threads:
            sp.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")

    g = sub.add_parser("gen-data", help="generate a synthetic corpus")
    g.add_argument("kind", choices=["rd1d", "lowrank"])
    g.add_argument("--nu", type=float, default=None, help="fixed diffusion coefficient (default: sample grid)")
    g.add_argument("--rho", type=float, default=None, help="fixed reaction rate (default: sample grid)")
    g.add_argument("--nx", type=int, default=1024)
    g.add_argument("--nt", type=int, default=200)
    g.add_argument("--t-end", type=float, default=1.0)
    g.add_argument("--modes", type=int, default=4, help="sinusoids in the initial condition")
    g.add_argument("--dims", type=_ints)
    g.add_argument("--ranks", type=_ints)
    g.add_argument("--decay", type=float, default=0.5)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--out", required=True)
    common(g)
    g.set_defaults(func=cmd_gen_data)

    def enc_opts(sp):
        sp.add_argument("--type", choices=["mgp", "tgp", "MGP", "TGP"])
        sp.add_argument("--rank", type=int)
        sp.add_argument("--patch", type=_patch, help="patch size, e.g. 32x20")
        sp.add_argument("--ranks", type=_ints, help="TGP ranks, one per aligned mode")
        sp.add_argument("--modes", type=_ints, help="TGP aligned modes (1-based)")
        sp.add_argument("--factors", choices=["gram", "hooi"])

    a = sub.add_parser("anchor", help="select medoid anchors from a corpus")
    enc_opts(a)
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--subsample", type=int, default=None, help="APPROXIMATE: score against a random subset")
    common(a)
    a.set_defaults(func=cmd_anchor)

    e = sub.add_parser("encode", help="encode a corpus into primitives")
    enc_opts(e)
    e.add_argument("--anchor", required=True)
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--out", required=True)
    common(e, seed=False)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode primitives back to a corpus")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--anchor", help="verify anchor hashes against this archive")
    common(d, seed=False, threads=False)
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("stats", help="error report between two corpora (JSON)")
    s.add_argument("--ref", required=True)
    s.add_argument("--est", required=True)
    s.add_argument("--time-mode", type=int)
    s.add_argument("--range", type=float, help="data range for PSNR")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    m = sub.add_parser("mds", help="2-d MDS of right singular frames (CSV)")
    m.add_argument("--in", dest="inp", required=True)
    m.add_argument("--rank", type=int, required=True)
    m.add_argument("--patch", type=_patch)
    m.add_argument("--channel", type=int, default=0)
    m.add_argument("--anchor", help="also embed the anchor-aligned frames")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mds)

    v = sub.add_parser("validate-prop2", help="Monte Carlo check of the aligned-distance law")
    v.add_argument("--p", type=int, default=400)
    v.add_argument("--r", type=int, default=100)
    v.add_argument("--trials", type=int, default=50)
    v.add_argument("--band", type=float, default=0.02)
    common(v)
    v.set_defaults(func=cmd_validate_prop2)

    t = sub.add_parser("toy-diffusion", help="scalar factorization toy experiment")
    t.add_argument("--law", choices=["anchored", "uniform"], default="anchored")
    t.add_argument("--a", type=float, default=0.5)
    t.add_argument("--b", type=float, default=4.0)
    t.add_argument("--steps", type=int, default=5000)
    t.add_argument("--n-train", type=int, default=20000)
    t.add_argument("--samples", type=int, default=10000)
    t.add_argument("--ddim-steps", type=int, default=250)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--hidden", type=int, default=None)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--out", required=True)
    common(t)
    t.set_defaults(func=cmd_toy_diffusion)

    tr = sub.add_parser("train", help="train a diffusion model on a primitive archive")
    tr.add_argument("--in", dest="inp", required=True)
    tr.add_argument("--steps", type=int, default=2000)
    tr.add_argument("--lr", type=float, default=None)
    tr.add_argument("--batch", type=int, default=256)
    tr.add_argument("--hidden", type=int, default=None)
    tr.add_argument("--cond-keys", help="comma-separated condition keys, e.g. nu,rho")
    tr.add_argument("--out", required=True)
    common(tr)
    tr.set_defaults(func=cmd_train)

    sa = sub.add_parser("sample", help="sample primitives from a trained model")
    sa.add_argument("--model", required=True)
    sa.add_argument("--n", type=int, default=16)
    sa.add_argument("--ddim-steps", type=int, default=250)
    sa.add_argument("--cond", type=_conds)
    sa.add_argument("--out", required=True)
    common(sa)
    sa.set_defaults(func=cmd_sample)

    sc = sub.add_parser("selfcheck", help="fast invariant suite")
    sc.set_defaults(func=cmd_selfcheck)
    return p


def _fill_defaults(args):
    from .diffusion import HIDDEN, LR, TOY_BATCH

    if args.command == "toy-diffusion" and args.batch is None:
        args.batch = TOY_BATCH
    if getattr(args, "lr", "absent") is None:
        args.lr = LR
    if getattr(args, "hidden", "absent") is None:
        args.hidden = HIDDEN


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    _fill_defaults(args)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gats {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GatsError, ArchiveError, ValueError, FileNotFoundError) as exc:
        print(f"gats {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
