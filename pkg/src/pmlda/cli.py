"""Config-driven command line front end.

Usage: ``pmlda <command> --config run.json [--set section.key=value ...]``.
Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numeric or
model error. Failures print one ``error[<code>]: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, imaging, inference
from . import io as pio
from .blend import TopicParams
from .distributions import rng_stream
from .exceptions import ConfigError, FileFormatError, PMLDAError
from .model import Corpus, Document, DocumentState, Hyperparams, generate_corpus
from .unified import GridSpec, UnifiedHyper, likelihood_grid

DEFAULTS = {
    "model": {"K": 2, "alpha": 1.0, "lambda": 0.5, "m": 1.0},
    "sampler": {
        "T": 2000,
        "burn_in": None,
        "thinning": 1,
        "seed": 0,
        "f": 1.0,
        "jitter": 0.5,
        "parallel": False,
        "sigma_proposal": "random_walk",
        "mu_rw_scale": 0.05,
        "z_prior_move": True,
    },
    "io": {
        "out": "out",
        "corpus": None,
        "image": None,
        "planes": None,
        "labels": None,
    },
    "features": {
        "kind": "mean_entropy",
        "window": 21,
        "intensity_scale": 10.0,
        "entropy_bins": 256,
        "ripple_frequency": None,
        "range_resolution": 0.025,
        "channels": ["L", "a", "b", "blue"],
    },
    "grouping": {"mode": "sliding", "window": 32, "stride": 32},
    "baseline": {
        "fcm": {"K": 2, "m": 1.5, "tol": 1e-6, "max_iter": 300},
        "lda": {"K": 2, "V": 100, "alpha": 1.0, "beta": 0.01, "iters": 500},
    },
    "generate": {"D": 20, "N_d": 100, "means": [[-4.0, -4.0], [6.0, 6.0]], "variance": 1.0, "fixed_s": None},
    "grid": {
        "means": [0.0, 1.0],
        "variance": 1.0,
        "pi": [0.5, 0.5],
        "alpha": [1.0, 1.0],
        "lambda": 1.0,
        "x_range": [-0.5, 1.5, 0.05],
        "z_range": [0.0, 1.0, 0.05],
        "m_values": [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
        "s_values": [0.1, 0.5, 1.0, 2.0, 5.0],
    },
    "oracle": {
        "x": 1.2,
        "means": [0.0, 3.0],
        "variance": 1.0,
        "pi": [0.5, 0.5],
        "s": 2.0,
        "retained": 50000,
        "burn_in": 5000,
        "resolution": 0.005,
        "max_tv": 0.05,
    },
}

COMMANDS = ("generate", "fit", "segment", "grid", "baseline-fcm", "baseline-lda", "oracle-check")


# ---------------------------------------------------------------------------
# configuration


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        path = f"{where}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {path!r} must be an object")
            out[key] = _merge(base[key], val, path + ".")
        else:
            out[key] = val
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_set(cfg: dict, assignment: str) -> None:
    key, sep, value = assignment.partition("=")
    if not sep:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    parts = key.strip().split(".")
    node = {}
    cursor = node
    for p in parts[:-1]:
        cursor = cursor.setdefault(p, {})
    cursor[parts[-1]] = _parse_value(value)
    cfg.update(_merge(cfg, node))


def load_config(path, sets=(), seed=None, out=None) -> dict:
    """Merge a JSON config file and overrides onto :data:`DEFAULTS`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    cfg = _merge(DEFAULTS, user)
    for s in sets:
        _apply_set(cfg, s)
    if seed is not None:
        cfg["sampler"]["seed"] = seed
    if out is not None:
        cfg["io"]["out"] = out
    return cfg


def _hyper(cfg: dict) -> Hyperparams:
    mod = cfg["model"]
    K = mod["K"]
    alpha = np.broadcast_to(np.asarray(mod["alpha"], dtype=float), (K,))
    return Hyperparams(alpha, mod["lambda"], mod["m"])


def _sampler_config(cfg: dict, **overrides) -> inference.SamplerConfig:
    s = dict(cfg["sampler"], **overrides)
    return inference.SamplerConfig(
        T=int(s["T"]),
        burn_in=s["burn_in"],
        thinning=int(s["thinning"]),
        seed=int(s["seed"]),
        f=float(s["f"]),
        jitter=float(s["jitter"]),
        parallel=bool(s["parallel"]),
        sigma_proposal=s["sigma_proposal"],
        mu_rw_scale=float(s["mu_rw_scale"]),
        z_prior_move=bool(s["z_prior_move"]),
        store_memberships=s.get("store_memberships", False),
        **{k: v for k, v in s.items() if k.startswith("update_")},
    )


def _validate(cfg: dict) -> None:
    """Build every typed object the config describes, mapping failures to ConfigError."""
    try:
        _hyper(cfg)
        _sampler_config(cfg)
        f = cfg["features"]
        if f["kind"] not in ("mean_entropy", "sunset", "raw"):
            raise ConfigError(f"features.kind must be mean_entropy, sunset or raw, got {f['kind']!r}")
        imaging.FeatureConfig(f["window"], f["intensity_scale"], f["entropy_bins"])
        g = cfg["grouping"]
        if g["mode"] not in ("sliding", "superpixel"):
            raise ConfigError(f"grouping.mode must be sliding or superpixel, got {g['mode']!r}")
        _grid_spec(cfg)
    except ConfigError:
        raise
    except (PMLDAError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _grid_spec(cfg: dict) -> GridSpec:
    g = cfg["grid"]
    return GridSpec(tuple(g["x_range"]), tuple(g["z_range"]), tuple(g["m_values"]), tuple(g["s_values"]))


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["io"]["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FileFormatError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _require(cfg: dict, key: str) -> str:
    val = cfg["io"][key]
    if not val:
        raise ConfigError(f"io.{key} is required for this command")
    return val


# ---------------------------------------------------------------------------
# image pipeline shared by segment and the baselines


def _image_features(cfg: dict):
    """Return ``(features (H, W, p), labels or None)`` from the configured image."""
    f, io = cfg["features"], cfg["io"]
    labels = pio.read_pgm(io["labels"]) if io["labels"] else None
    if f["kind"] == "mean_entropy":
        img = pio.read_pgm(_require(cfg, "image")).astype(float)
        fc = imaging.FeatureConfig(f["window"], f["intensity_scale"], f["entropy_bins"])
        feats = imaging.extract_mean_entropy(img, fc)
        if f["ripple_frequency"] is not None:
            if labels is None:
                raise ConfigError("a ripple feature needs io.labels (superpixels)")
            spec = imaging.RippleFilterSpec(f["ripple_frequency"], f["range_resolution"])
            rip = imaging.region_ripple_feature(img, labels, imaging.build_ripple_filter(spec))
            feats = np.concatenate([feats, rip[:, :, None]], axis=-1)
    else:
        planes = pio.read_raw_planes(_require(cfg, "planes"))
        missing = [c for c in f["channels"] if c not in planes]
        if missing:
            raise ConfigError(f"planes file lacks channels {missing}")
        chans = [planes[c] for c in f["channels"]]
        if f["kind"] == "sunset":
            if len(chans) != 4:
                raise ConfigError("sunset features need four channels: lightness, a, b, blue")
            feats = imaging.sunset_features(*chans)
        else:
            feats = np.stack(chans, axis=-1)
    return feats, labels


def _grouping(cfg: dict, labels) -> imaging.DocumentGrouping:
    g = cfg["grouping"]
    if g["mode"] == "superpixel":
        if labels is None:
            raise ConfigError("superpixel grouping needs io.labels")
        return imaging.DocumentGrouping("superpixel", labels=labels)
    return imaging.DocumentGrouping("sliding", g["window"], g["stride"])


def _image_corpus(cfg: dict):
    feats, labels = _image_features(cfg)
    corpus = imaging.build_documents(feats, _grouping(cfg, labels))
    return corpus, feats.shape[:2]


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg: dict) -> list:
    g = cfg["generate"]
    hyper = _hyper(cfg)
    topics = TopicParams(np.asarray(g["means"], dtype=float), g["variance"])
    rng = rng_stream(int(cfg["sampler"]["seed"]), 0)
    corpus, states = generate_corpus(hyper, topics, int(g["D"]), g["N_d"], rng, fixed_s=g["fixed_s"])
    out = _out_dir(cfg)
    pio.write_corpus_csv(out / "corpus.csv", corpus)
    pio.write_topics(out / "true_topics.csv", topics)
    return [out / "corpus.csv", out / "true_topics.csv"] + pio.write_states(out, corpus, states, "true_")


def _fit(cfg: dict, corpus, out: Path) -> tuple:
    hyper = _hyper(cfg)
    chain, best = inference.run_sampler(corpus, hyper, _sampler_config(cfg))
    written = pio.write_states(out, corpus, best.states, "map_")
    pio.write_topics(out / "map_topics.csv", best.topics)
    written += [out / "map_topics.csv"] + pio.write_chain(out, chain)
    return best, written


def cmd_fit(cfg: dict) -> list:
    out = _out_dir(cfg)
    corpus = pio.read_corpus_csv(cfg["io"]["corpus"] or out / "corpus.csv")
    _, written = _fit(cfg, corpus, out)
    return written


def cmd_segment(cfg: dict) -> list:
    corpus, shape = _image_corpus(cfg)
    out = _out_dir(cfg)
    best, written = _fit(cfg, corpus, out)
    maps = imaging.render_membership_maps(corpus, best.states, cfg["model"]["K"], shape)
    return written + pio.write_membership_maps(out / "maps", maps)


def cmd_grid(cfg: dict) -> list:
    g = cfg["grid"]
    spec = _grid_spec(cfg)
    topics = TopicParams(np.asarray(g["means"], dtype=float).reshape(-1, 1), g["variance"])
    hyper = UnifiedHyper(g["alpha"], g["lambda"])
    grid = likelihood_grid(spec, topics, hyper, g["pi"])
    out = _out_dir(cfg)
    pio.write_grid_csv(out / "grid.csv", spec, grid)
    return [out / "grid.csv"]


def _baseline_input(cfg: dict):
    if cfg["io"]["image"] or cfg["io"]["planes"]:
        return _image_corpus(cfg)
    return pio.read_corpus_csv(_require(cfg, "corpus")), None


def cmd_baseline_fcm(cfg: dict) -> list:
    b = cfg["baseline"]["fcm"]
    corpus, shape = _baseline_input(cfg)
    rng = rng_stream(int(cfg["sampler"]["seed"]), 0)
    X = corpus.stacked_words()
    state = baselines.fcm_fit(X, int(b["K"]), b["m"], b["tol"], int(b["max_iter"]), rng)
    out = _out_dir(cfg)
    path = out / "fcm_centroids.csv"
    pio.write_topics(path, TopicParams(state.centroids, 1.0))
    splits = np.cumsum([d.n_words for d in corpus])[:-1]
    per_doc = np.split(state.memberships, splits)
    written = [path]
    mem = out / "fcm_memberships.csv"
    with open(mem, "w", encoding="utf-8") as fh:
        fh.write("doc_id,n," + ",".join(f"z{k}" for k in range(state.centroids.shape[0])) + "\n")
        for d, Z in zip(corpus, per_doc):
            for n, z in enumerate(Z):
                fh.write(f"{d.id},{n}," + ",".join(pio.fmt(v) for v in z) + "\n")
    written.append(mem)
    if shape is not None:
        maps = imaging.render_membership_maps(corpus, per_doc, state.centroids.shape[0], shape)
        written += pio.write_membership_maps(out / "fcm_maps", maps)
    return written


def cmd_baseline_lda(cfg: dict) -> list:
    b = cfg["baseline"]["lda"]
    corpus, shape = _baseline_input(cfg)
    seed = int(cfg["sampler"]["seed"])
    X = corpus.stacked_words()
    _, tokens = baselines.kmeans_quantize(X, int(b["V"]), rng=rng_stream(seed, 0))
    docs = np.split(tokens, np.cumsum([d.n_words for d in corpus])[:-1])
    state = baselines.lda_fit(docs, int(b["K"]), b["alpha"], b["beta"], int(b["iters"]), rng_stream(seed, 1), V=int(b["V"]))
    labels = baselines.lda_segment(docs, state)
    out = _out_dir(cfg)
    pio.write_token_csv(out / "tokens.csv", [d.id for d in corpus], docs)
    pio.write_token_csv(out / "lda_labels.csv", [d.id for d in corpus], labels)
    written = [out / "tokens.csv", out / "lda_labels.csv"]
    if shape is not None:
        maps = imaging.labels_to_map(corpus, labels, int(b["K"]), shape)
        written += pio.write_membership_maps(out / "lda_maps", maps)
    return written


class OracleFailure(PMLDAError):
    """The sampler disagrees with the grid posterior beyond the configured limit."""


def oracle_check(cfg: dict) -> dict:
    """Compare the sampler's membership draws for one word with the grid posterior."""
    o = cfg["oracle"]
    K = 2
    hyper = Hyperparams(np.broadcast_to(np.asarray(cfg["model"]["alpha"], dtype=float), (K,)), cfg["model"]["lambda"], cfg["model"]["m"])
    topics = TopicParams(np.asarray(o["means"], dtype=float).reshape(K, 1), o["variance"])
    doc = Document("oracle", np.array([[o["x"]]]))
    pi = np.asarray(o["pi"], dtype=float)
    corpus = Corpus((doc,))
    burn = int(o["burn_in"])
    sc = _sampler_config(
        cfg,
        T=burn + int(o["retained"]),
        burn_in=burn,
        thinning=1,
        store_memberships=True,
        update_pi=False,
        update_s=False,
        update_mu=False,
        update_sigma=False,
    )
    init = [DocumentState(pi, o["s"], np.array([[0.5, 0.5]]))]
    chain, _ = inference.run_sampler(corpus, hyper, sc, init_states=init, init_topics=topics)
    z1 = np.array([m[0][0, 0] for m in chain.memberships])
    grid, mass = inference.grid_posterior_oracle(doc, pi, o["s"], topics, hyper, o["resolution"])
    tv = inference.total_variation(inference.histogram_on_grid(z1, grid), mass)
    return {"tv": tv, "samples": int(z1.size), "resolution": o["resolution"], "max_tv": o["max_tv"], "pass": bool(tv < o["max_tv"])}


def cmd_oracle_check(cfg: dict) -> list:
    report = oracle_check(cfg)
    out = _out_dir(cfg)
    path = out / "oracle_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"total variation {report['tv']:.4f} over {report['samples']} samples (limit {report['max_tv']})")
    if not report["pass"]:
        raise OracleFailure(f"total variation {report['tv']:.4f} exceeds {report['max_tv']}")
    return [path]


HANDLERS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "segment": cmd_segment,
    "grid": cmd_grid,
    "baseline-fcm": cmd_baseline_fcm,
    "baseline-lda": cmd_baseline_lda,
    "oracle-check": cmd_oracle_check,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    epilog = "configuration defaults (override in the JSON file or with --set):\n" + json.dumps(DEFAULTS, indent=2)
    parser = argparse.ArgumentParser(
        prog="pmlda",
        description="Partial-membership topic modelling of continuous features.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value, e.g. sampler.T=500 (repeatable)")
    parser.add_argument("--seed", type=int, help="override sampler.seed")
    parser.add_argument("--out", metavar="DIR", help="override io.out")
    parser.add_argument("--dry-run", action="store_true", help="validate and print the resolved config, then stop")
    return parser


def _fail(code: int, message: str) -> int:
    print(f"error[{code}]: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set, args.seed, args.out)
        _validate(cfg)
        if args.dry_run:
            print(json.dumps({"command": args.command, "config": cfg}, indent=2, sort_keys=True))
            return 0
        artifacts = HANDLERS[args.command](cfg)
        pio.write_manifest(_out_dir(cfg), args.command, cfg, artifacts)
    except ConfigError as exc:
        return _fail(1, exc)
    except (FileFormatError, OSError) as exc:
        return _fail(2, exc)
    except (PMLDAError, ValueError, FloatingPointError, ArithmeticError) as exc:
        return _fail(3, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
